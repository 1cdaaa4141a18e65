#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace mdl {

/// Outcome of a grid check of one analytic inequality.
///
/// max_violation is the largest signed slack (violating side minus bound)
/// over the grid; a value <= tolerance means the inequality held everywhere.
struct InequalityReport {
  std::string id;
  std::size_t grid_size = 0;
  double max_violation = -std::numeric_limits<double>::infinity();
  std::vector<double> worst_point;
  std::string coordinates;  // names of worst_point entries, e.g. "theta,theta_tilde"
  double tolerance = 1e-12;
  std::string note;

  bool satisfied() const { return max_violation <= tolerance; }

  /// Folds one evaluation into the report. Ties keep the lexicographically
  /// smallest point so the result does not depend on evaluation order.
  void record(double violation, std::vector<double> point);
  /// Merges another report over the same inequality.
  void merge(const InequalityReport& other);
};

/// Grid check of the KL entropy inequalities (i)-(viii) and the symmetric
/// counterparts of (iii)-(viii), each on its own hypothesis region.
///
/// Each axis holds grid_density uniform points plus 64 log-spaced points
/// crowding every region boundary. Also emits "entropy.vi.const2", the form
/// D(t||t~) <= 2 t~ that the standard chain -ln(1-t~) <= t~/(1-t~) supports;
/// it is informational and never replaces "entropy.vi".
///
/// first_constant replaces the 2 in (i); anything above 2 must produce a
/// violation, which is how the verification suite tests itself.
std::vector<InequalityReport> check_entropy_inequalities(std::size_t grid_density, double first_constant = 2.0);

/// Checks the Gaussian sandwich of binomial probabilities
///   p(a|n) <= exp(-n D(a||theta0)) / sqrt(2 pi a(1-a) n)
///   p(a|n) >= exp(-n D(a||theta0)) / sqrt(8 a(1-a) n)
/// for all 2 <= n <= n_max and 1 <= k <= n-1. Slack is measured in log space.
InequalityReport check_binomial_sandwich(std::size_t n_max, double theta0);

/// Values of S1 = sum sqrt(n) exp(-z^2 n) and S2 = sum exp(-z^2 n)/sqrt(n).
struct SqrtExpSums {
  double s1 = 0.0;
  double s1_tail = 0.0;  // bound on the truncated remainder of S1
  double s2 = 0.0;
  double s2_tail = 0.0;
  std::size_t terms = 0;
};

SqrtExpSums sum_sqrt_exp(double z);

/// Checks sqrt(pi)/(2z^3) -+ 1/(z sqrt(2e)) bracketing S1 and S2 <= sqrt(pi)/z.
/// Throws std::invalid_argument for z <= 0.
InequalityReport check_sum_sqrt_exp(double z);

}  // namespace mdl
