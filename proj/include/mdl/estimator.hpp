#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mdl/model_class.hpp"

namespace mdl {

/// Sufficient statistic of a Bernoulli string: length n and ones-count k.
struct ObservationSummary {
  std::uint64_t n = 0;
  std::uint64_t k = 0;

  /// k / n, or 1/2 for the empty string (it never enters a score then).
  double alpha() const { return n == 0 ? 0.5 : static_cast<double>(k) / static_cast<double>(n); }
};

enum class Rule { mdl, ml, bayes };

Rule parse_rule(std::string_view name);
std::string_view rule_name(Rule rule);

/// Scores closer than this (nats) are treated as tied.
inline constexpr double kScoreTieTolerance = 1e-12;

/// n * D(k/n || theta_i) + Kw_i * ln 2, +inf for a mismatched boundary member.
double mdl_score(const ModelClass& cls, std::size_t i, const ObservationSummary& obs);

/// Two-part code (MAP) selection. Ties within kScoreTieTolerance go to the
/// smaller Kw, then to the smaller parameter. Throws std::domain_error when
/// every score is infinite and std::invalid_argument when k > n.
std::size_t mdl_select(const ModelClass& cls, const ObservationSummary& obs);

/// mdl_select with every complexity taken as 0.
std::size_t ml_select(const ModelClass& cls, const ObservationSummary& obs);

/// Whether member i beats member j at obs:
///   n * D^alpha(theta_i || theta_j) >= ln 2 * (Kw_i - Kw_j)   (up to the tie tolerance).
/// Throws std::domain_error when either parameter is 0 or 1.
bool beats(const ModelClass& cls, std::size_t i, std::size_t j, const ObservationSummary& obs);

/// Posterior-mean prediction sum w P(x|theta) theta / sum w P(x|theta),
/// evaluated in log space. Throws std::domain_error on zero mixture mass.
double bayes_predictive(const ModelClass& cls, const ObservationSummary& obs);

/// A maximal run of ones-counts k_lo..k_hi that all select the same member.
struct DecisionRegion {
  std::uint64_t k_lo = 0;
  std::uint64_t k_hi = 0;
  std::size_t member = 0;
};

/// The mdl_select decision for every k in 0..n at a fixed n.
///
/// The per-member scores are lines in alpha, so the selection is read off
/// their lower envelope. Counts that fall within floating-point reach of an
/// envelope breakpoint, and the boundary counts k = 0 and k = n, are resolved
/// by calling mdl_select directly and stored as overrides.
class DecisionMap {
 public:
  /// Throws std::invalid_argument when n == 0 or no member is interior.
  DecisionMap(const ModelClass& cls, std::uint64_t n, bool ignore_complexity = false);

  std::uint64_t n() const { return n_; }
  /// Envelope breakpoints in alpha, strictly inside (0,1), ascending.
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  /// Member chosen on each envelope segment (breakpoints().size() + 1 entries).
  const std::vector<std::size_t>& selected() const { return selected_; }
  const std::vector<std::pair<std::uint64_t, std::size_t>>& overrides() const { return overrides_; }

  std::size_t lookup(std::uint64_t k) const;
  /// Covers 0..n in order; neighbouring regions select different members.
  std::vector<DecisionRegion> regions() const;

 private:
  std::size_t segment_member(std::uint64_t k) const;

  std::uint64_t n_ = 0;
  std::vector<double> breakpoints_;
  std::vector<std::size_t> selected_;
  std::vector<std::pair<std::uint64_t, std::size_t>> overrides_;
};

DecisionMap decision_map(const ModelClass& cls, std::uint64_t n);

}  // namespace mdl
