#include "mdl/divergence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace mdl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ln(a/b) for a, b > 0, accurate when a/b is close to 1.
double log_ratio(double a, double b) {
  const double r = a / b;
  if (r > 0.5 && r < 2.0) return std::log1p((a - b) / b);
  return std::log(a) - std::log(b);
}

// x * ln(x / y) with the 0 ln 0 = 0 and x ln(x/0) = inf conventions.
double xlogx_over_y(double x, double y) {
  if (x == 0.0) return 0.0;
  if (y == 0.0) return kInf;
  return x * log_ratio(x, y);
}

// P(K >= k)
double upper_tail(std::uint64_t n, std::uint64_t k, double theta) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  return boost::math::ibeta(static_cast<double>(k), static_cast<double>(n - k + 1), theta);
}

// P(K <= k)
double lower_tail(std::uint64_t n, std::uint64_t k, double theta) {
  if (k >= n) return 1.0;
  return boost::math::ibetac(static_cast<double>(k + 1), static_cast<double>(n - k), theta);
}

}  // namespace

double log1p_remainder(double x) {
  if (std::abs(x) < 0.05) {
    double term = x * x;
    double sum = 0.0;
    for (int j = 2; j <= 18; ++j) {
      sum += (j % 2 == 0 ? term : -term) / j;
      term *= x;
    }
    return sum;
  }
  return x - std::log1p(x);
}

double kl(double alpha, double theta) {
  if (alpha == theta) return 0.0;
  const double d = alpha - theta;
  if (theta > 0.0 && theta < 1.0 && std::abs(d) < 0.25 * std::min(theta, 1.0 - theta)) {
    // Forming 1 - alpha would cost the low bits of d; expand around theta instead.
    const double u = d / theta;
    const double v = -d / (1.0 - theta);
    const double value = d * d / (theta * (1.0 - theta)) - (alpha * log1p_remainder(u) + (1.0 - alpha) * log1p_remainder(v));
    return value < 0.0 ? 0.0 : value;
  }
  double second = 0.0;
  if (alpha < 1.0) {
    if (theta == 1.0) return kInf;
    const double r = (1.0 - alpha) / (1.0 - theta);
    // Near r = 1 the complements cancel, so use theta - alpha directly.
    second = (1.0 - alpha) * (r > 0.5 && r < 2.0 ? std::log1p((theta - alpha) / (1.0 - theta))
                                                 : std::log1p(-alpha) - std::log1p(-theta));
  }
  const double value = xlogx_over_y(alpha, theta) + second;
  return value < 0.0 ? 0.0 : value;
}

double extended_kl(double alpha, double theta, double theta_tilde) {
  if (!(theta > 0.0 && theta < 1.0) || !(theta_tilde > 0.0 && theta_tilde < 1.0)) {
    throw std::domain_error("extended_kl needs interior parameters");
  }
  if (theta == theta_tilde) return 0.0;
  return alpha * log_ratio(theta, theta_tilde) + (1.0 - alpha) * log_ratio(1.0 - theta, 1.0 - theta_tilde);
}

double log_binomial_pmf(std::uint64_t n, std::uint64_t k, double theta) {
  if (n == 0) throw std::invalid_argument("log_binomial_pmf needs n >= 1");
  if (k > n) throw std::invalid_argument("log_binomial_pmf: k=" + std::to_string(k) + " > n=" + std::to_string(n));
  if (theta == 0.0) return k == 0 ? 0.0 : -kInf;
  if (theta == 1.0) return k == n ? 0.0 : -kInf;
  const auto dn = static_cast<double>(n);
  const auto dk = static_cast<double>(k);
  double log_choose = 0.0;
  if (k != 0 && k != n) {
    log_choose = boost::math::lgamma(dn + 1.0) - boost::math::lgamma(dk + 1.0) - boost::math::lgamma(dn - dk + 1.0);
  }
  double log_p = log_choose;
  if (k != 0) log_p += dk * std::log(theta);
  if (k != n) log_p += (dn - dk) * std::log1p(-theta);
  return log_p;
}

double binomial_tail(std::uint64_t n, std::uint64_t k_lo, std::uint64_t k_hi, double theta) {
  if (k_lo > k_hi || k_hi > n) {
    throw std::invalid_argument("binomial_tail: need 0 <= k_lo <= k_hi <= n");
  }
  if (theta == 0.0) return k_lo == 0 ? 1.0 : 0.0;
  if (theta == 1.0) return k_hi == n ? 1.0 : 0.0;
  if (k_lo == 0 && k_hi == n) return 1.0;
  if (k_lo == k_hi) return std::exp(log_binomial_pmf(n, k_lo, theta));

  const double mean = static_cast<double>(n) * theta;
  double p = 0.0;
  if (static_cast<double>(k_lo) > mean) {
    p = upper_tail(n, k_lo, theta) - upper_tail(n, k_hi + 1, theta);
  } else if (static_cast<double>(k_hi) < mean) {
    p = lower_tail(n, k_hi, theta) - (k_lo == 0 ? 0.0 : lower_tail(n, k_lo - 1, theta));
  } else {
    const double below = k_lo == 0 ? 0.0 : lower_tail(n, k_lo - 1, theta);
    const double above = upper_tail(n, k_hi + 1, theta);
    p = 1.0 - below - above;
  }
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

}  // namespace mdl
