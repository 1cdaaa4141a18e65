#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mdl/inequality_checks.hpp"
#include "mdl/model_class.hpp"
#include "mdl/parameter.hpp"

namespace mdl {

/// Half-open interval [lo, hi) with exact endpoints.
struct DyadicInterval {
  Rational lo;
  Rational hi;

  Rational length() const { return hi - lo; }
  bool contains(const Rational& x) const { return lo <= x && x < hi; }
  std::string to_string() const;
};

enum class StepKind : char { l = 'l', c = 'c', r = 'r' };

/// Step k of the nested construction around theta0: J_k keeps theta0, I_k is
/// the rest of J_{k-1} (two pieces after a centred step).
struct IntervalStep {
  unsigned k = 0;
  StepKind kind = StepKind::l;
  DyadicInterval J;
  std::vector<DyadicInterval> I;
};

inline constexpr unsigned kMaxIntervalSteps = 200;

/// Starting from J_0 = [0,1) with J_{k-1} = [lo, lo + d):
///   theta0 <  lo + 3d/8          l-step: J = [lo, lo + d/2)
///   theta0 <  lo + 5d/8          c-step: J = [lo + d/4, lo + 3d/4)
///   otherwise                    r-step: J = [lo + d/2, lo + d)
/// Throws std::invalid_argument for theta0 in {0,1} or steps > 200.
std::vector<IntervalStep> build_intervals(const Parameter& theta0, unsigned steps);

/// max{0, floor(log2(3 / (4 theta0)))}, with theta0 replaced by 1 - theta0
/// above 1/2. Under the construction's strict inequalities the first c-step
/// can come one step earlier than k0 + 1 (theta0 = 3/16 has k0 = 2 and a
/// c-step at step 2).
unsigned k0(const Parameter& theta0);

struct DeltaEntry {
  unsigned k = 0;
  std::optional<std::size_t> theta_I;  // none when I_k holds no member
  std::size_t theta_J = 0;
  double delta = 0.0;  // +inf when theta_I is none
};

struct DeltaProfile {
  std::size_t theta0_index = 0;
  std::vector<IntervalStep> steps;
  std::vector<DeltaEntry> entries;
};

/// Lowest-complexity members of I_k and J_k (ties to the smaller parameter)
/// and Delta(k) = max{Kw(theta_I) - Kw(theta_J), 0}.
DeltaProfile delta_profile(const ModelClass& cls, std::size_t theta0_index, unsigned steps);

/// sum 2^-Delta sqrt(Delta); Delta = 0 and Delta = +inf both add 0.
double delta_series_sum(const std::vector<double>& deltas);

struct MainBound {
  double value = 0.0;
  double kw0 = 0.0;
  double series = 0.0;
  /// Kw0 + sum 2^-Delta, a sharper form that is not proven; report only.
  double conjectured = 0.0;
  /// Set when the last 32 evaluated terms add more than 1e-9.
  bool truncated = false;
};

MainBound main_bound(const ModelClass& cls, std::size_t theta0_index, unsigned steps);

struct UniformCondition {
  bool holds = true;
  std::optional<unsigned> first_violation;
  unsigned k_first = 0;  // first k the condition constrains
  unsigned k_max = 0;
};

/// Checks min{Kw(t) : t in Theta, t != theta0, |t - theta0| <= 2^-k} >= (k - b)/a
/// for a Kw0 + b < k <= k_max. Neighbourhoods without other members pass.
/// Throws std::invalid_argument when k_max exceeds cls.resolution_bits(),
/// a < 1 or b < 0.
UniformCondition check_uniform_condition(const ModelClass& cls, std::size_t theta0_index, double a, double b,
                                         unsigned k_max);

/// N + Kw0 for a class of N members.
double finite_class_bound(const ModelClass& cls, std::size_t theta0_index);

struct AppendixCheckOptions {
  unsigned k_max = 40;
  /// theta0 values used for the extended-divergence sampling checks.
  std::size_t sampled_theta0 = 64;
  unsigned threads = 1;
};

/// Exact checks of the interval properties over theta0_grid and k <= k_max,
/// properties of the interval optima on each class (classes need a true
/// parameter), and sampled lower bounds on the extended divergence.
std::vector<InequalityReport> check_appendix_lemmas(const std::vector<Parameter>& theta0_grid,
                                                    const std::vector<ModelClass>& classes,
                                                    const AppendixCheckOptions& options = {});

/// theta-tilde versus theta extended divergence alpha ln(tt/t) + (1-alpha) ln((1-tt)/(1-t)),
/// arranged to keep relative accuracy when all three points are close.
double extended_kl_close(double alpha, double theta_tilde, double theta);

}  // namespace mdl
