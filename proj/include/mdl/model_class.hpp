#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdl/parameter.hpp"

namespace mdl {

/// A parameter together with its description length Kw (bits) and its
/// weight 2^-Kw.
struct CodedParameter {
  CodedParameter(Parameter p, double kw);

  Parameter param;
  double complexity_kw = 0.0;
  double weight = 1.0;
};

/// Finite Bernoulli model class, sorted strictly by parameter value.
///
/// Immutable after construction. Double-precision views of the parameters
/// (value, ln value, ln(1 - value)) are cached for the numeric kernels.
class ModelClass {
 public:
  /// Sorts members; throws std::invalid_argument on duplicates, an empty
  /// member list, negative complexities, or a truth that is not a member.
  explicit ModelClass(std::vector<CodedParameter> members, std::optional<Parameter> truth = std::nullopt);

  std::size_t size() const { return members_.size(); }
  const CodedParameter& operator[](std::size_t i) const { return members_[i]; }
  std::span<const CodedParameter> members() const { return members_; }

  std::optional<std::size_t> true_index() const { return true_index_; }
  /// Throws std::logic_error when no true parameter is designated.
  std::size_t require_true_index() const;
  ModelClass with_truth(const Parameter& truth) const;

  double kraft_sum() const { return kraft_sum_; }

  /// Index of an exact member value, if present (binary search).
  std::optional<std::size_t> find(const Parameter& p) const;
  /// First member index with value >= p.
  std::size_t lower_bound(const Parameter& p) const;
  /// First member index with value > p.
  std::size_t upper_bound(const Parameter& p) const;

  double value(std::size_t i) const { return value_[i]; }
  double log_value(std::size_t i) const { return log_value_[i]; }
  double log_complement(std::size_t i) const { return log_complement_[i]; }
  double kw(std::size_t i) const { return members_[i].complexity_kw; }
  bool interior(std::size_t i) const { return interior_[i] != 0; }
  double min_kw() const { return min_kw_; }

  /// (theta_i - theta_j)^2 evaluated from the exact difference.
  double squared_distance(std::size_t i, std::size_t j) const;

  /// Largest k with 2^-k >= the smallest gap between consecutive members;
  /// 0 for singleton classes.
  unsigned resolution_bits() const;

  /// Stable 64-bit FNV-1a digest of the canonical member listing.
  std::string hash() const;

 private:
  std::vector<CodedParameter> members_;
  std::optional<std::size_t> true_index_;
  double kraft_sum_ = 0.0;
  double min_kw_ = 0.0;
  std::vector<double> value_;
  std::vector<double> log_value_;
  std::vector<double> log_complement_;
  std::vector<char> interior_;
};

/// Kw = 2 for 0 and 1; otherwise l + 2 floor(log2(l + 1)) where l is the
/// binary length of the dyadic parameter. Throws for non-dyadic input.
double dyadic_complexity(const Parameter& theta);

/// Fair-coin truth 1/2 against competitors 1/2 + 2^-(k+1), k = 1 .. 2^N - 1,
/// all at complexity N. Accepts 1 <= N <= 12.
ModelClass counterexample_class(unsigned n_bits);

/// The same class truncated at k <= 2^N - 2, plus extra parameters that must
/// be strictly more complex than N and distinct from the base members.
ModelClass extended_counterexample_class(unsigned n_bits, const std::vector<std::pair<Parameter, double>>& extras);

/// All binary fractions of length <= precision, plus 0 and 1, with the
/// dyadic complexity. Accepts 1 <= precision <= 20. No truth is designated.
ModelClass dyadic_grid_class(unsigned precision);

/// Polynomial image phi(t) = sum c_i t^i of the dyadic grid, Kw(phi(t)) =
/// dyadic_complexity(t). Throws when phi leaves [0,1] or collides on the grid.
ModelClass distorted_class(const std::vector<Rational>& poly_coeffs, unsigned precision);

struct KraftCheck {
  double sum = 0.0;
  bool satisfied = false;
};

/// Classes with a Kraft sum above 1 stay usable; they are only flagged.
KraftCheck validate_kraft(const ModelClass& cls);

}  // namespace mdl
