#include "mdl/inequality_checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "mdl/divergence.hpp"

namespace mdl {

void InequalityReport::record(double violation, std::vector<double> point) {
  ++grid_size;
  if (std::isnan(violation)) violation = std::numeric_limits<double>::infinity();
  if (violation > max_violation || (violation == max_violation && point < worst_point)) {
    max_violation = violation;
    worst_point = std::move(point);
  }
}

void InequalityReport::merge(const InequalityReport& other) {
  const std::size_t count = grid_size + other.grid_size;
  if (other.grid_size > 0 &&
      (other.max_violation > max_violation ||
       (other.max_violation == max_violation && other.worst_point < worst_point))) {
    max_violation = other.max_violation;
    worst_point = other.worst_point;
  }
  grid_size = count;
}

namespace {

constexpr int kBoundaryPoints = 64;

// Offsets 1e-2 ... 1e-14, log-spaced.
std::vector<double> boundary_offsets() {
  std::vector<double> out;
  out.reserve(kBoundaryPoints);
  for (int i = 0; i < kBoundaryPoints; ++i) {
    out.push_back(std::pow(10.0, -2.0 - 12.0 * i / (kBoundaryPoints - 1)));
  }
  return out;
}

// Uniform points on [lo, hi] plus boundary-crowding points inside the range.
// Endpoints are kept only when the region includes them.
std::vector<double> axis(double lo, double hi, std::size_t density, bool lo_closed, bool hi_closed) {
  std::vector<double> pts;
  const std::size_t m = std::max<std::size_t>(density, 2);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
    if ((i == 0 && !lo_closed) || (i == m - 1 && !hi_closed)) continue;
    pts.push_back(x);
  }
  for (double off : boundary_offsets()) {
    const double w = off * (hi - lo);
    pts.push_back(lo + w);
    pts.push_back(hi - w);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double closer_to_half(double a, double b) { return std::abs(a - 0.5) <= std::abs(b - 0.5) ? a : b; }

InequalityReport make_report(std::string id, std::string coords, std::string note = {}) {
  InequalityReport r;
  r.id = std::move(id);
  r.coordinates = std::move(coords);
  r.note = std::move(note);
  return r;
}

using PairViolation = std::function<double(double, double)>;

InequalityReport over_pairs(InequalityReport r, const std::vector<double>& xs, const std::vector<double>& ys,
                            const std::function<bool(double, double)>& in_region, const PairViolation& slack) {
  for (double x : xs) {
    for (double y : ys) {
      if (!in_region(x, y)) continue;
      r.record(slack(x, y), {x, y});
    }
  }
  return r;
}

// (iv) lives on t <= 1/4 with t~ in [t/3, 3t]; parametrize t~ = r t.
InequalityReport lemma_iv(std::size_t density, bool mirrored) {
  auto rep = make_report(mirrored ? "entropy.iv.sym" : "entropy.iv", "theta,theta_tilde");
  const auto ts = axis(0.0, 0.25, density, false, true);
  const auto rs = axis(1.0 / 3.0, 3.0, density, true, true);
  for (double t : ts) {
    for (double r : rs) {
      const double tt = t * r;
      if (tt >= 1.0) continue;
      const double s = closer_to_half(t, tt);
      const double bound = 3.0 * (t - tt) * (t - tt) / (2.0 * s * (1.0 - s));
      if (mirrored) {
        rep.record(kl(1.0 - t, 1.0 - tt) - bound, {1.0 - t, 1.0 - tt});
      } else {
        rep.record(kl(t, tt) - bound, {t, tt});
      }
    }
  }
  return rep;
}

// (vii): D(t || t 2^-j) <= j t for t <= 1/2, j >= 1.
InequalityReport lemma_vii(std::size_t density, bool mirrored) {
  auto rep = make_report(mirrored ? "entropy.vii.sym" : "entropy.vii", "theta,j");
  for (double t : axis(0.0, 0.5, density, false, true)) {
    for (int j = 1; j <= 60; ++j) {
      const double scaled = std::ldexp(t, -j);
      double value = mirrored ? kl(1.0 - t, 1.0 - scaled) : kl(t, scaled);
      if (mirrored && scaled < 1e-12) {
        // 1 - scaled has lost the digits of scaled; use t ln 2^j + (1-t) ln((1-t)/(1-scaled)).
        value = t * j * std::numbers::ln2 + (1.0 - t) * (std::log1p(-t) - std::log1p(-scaled));
      }
      rep.record(value - j * t, {mirrored ? 1.0 - t : t, static_cast<double>(j)});
    }
  }
  return rep;
}

// (viii): D(t || 1 - 2^-j) <= j for t <= 1/2, j >= 1.
InequalityReport lemma_viii(std::size_t density, bool mirrored) {
  auto rep = make_report(mirrored ? "entropy.viii.sym" : "entropy.viii", "theta,j");
  for (double t : axis(0.0, 0.5, density, false, true)) {
    for (int j = 1; j <= 60; ++j) {
      const double eps = std::ldexp(1.0, -j);
      double value = 0.0;
      if (mirrored) {
        value = kl(1.0 - t, eps);
      } else {
        // t ln(t/(1-eps)) + (1-t) ln((1-t)/eps), stable for tiny eps.
        value = t * (std::log(t) - std::log1p(-eps)) + (1.0 - t) * (std::log1p(-t) + j * std::numbers::ln2);
      }
      rep.record(value - j, {mirrored ? 1.0 - t : t, static_cast<double>(j)});
    }
  }
  return rep;
}

}  // namespace

std::vector<InequalityReport> check_entropy_inequalities(std::size_t grid_density, double first_constant) {
  std::vector<InequalityReport> out;
  const auto unit = axis(0.0, 1.0, grid_density, false, false);
  const auto lower_half = axis(0.0, 0.5, grid_density, false, true);
  const auto upper_half = axis(0.5, 1.0, grid_density, true, false);
  const auto middle = axis(0.25, 0.75, grid_density, true, true);
  auto any = [](double, double) { return true; };

  // (i) D >= 2 (t - t~)^2
  out.push_back(over_pairs(make_report("entropy.i", "theta,theta_tilde"), unit, unit, any, [=](double t, double tt) {
    return first_constant * (t - tt) * (t - tt) - kl(t, tt);
  }));
  // (ii) D <= 8/3 (t - t~)^2 on [1/4, 3/4]
  out.push_back(over_pairs(make_report("entropy.ii", "theta,theta_tilde"), middle, middle, any,
                           [](double t, double tt) { return kl(t, tt) - 8.0 / 3.0 * (t - tt) * (t - tt); }));
  // (iii) D >= (t - t~)^2 / (2 s (1-s)), s the point closer to 1/2
  auto iii = [](double t, double tt) {
    const double s = closer_to_half(t, tt);
    return (t - tt) * (t - tt) / (2.0 * s * (1.0 - s)) - kl(t, tt);
  };
  out.push_back(over_pairs(make_report("entropy.iii", "theta,theta_tilde"), lower_half, lower_half, any, iii));
  out.push_back(over_pairs(make_report("entropy.iii.sym", "theta,theta_tilde"), upper_half, upper_half, any, iii));
  // (iv)
  out.push_back(lemma_iv(grid_density, false));
  out.push_back(lemma_iv(grid_density, true));
  // (v) D(t~ || t) >= t~ (ln t~ - ln t - 1)
  out.push_back(over_pairs(make_report("entropy.v", "theta,theta_tilde"), unit, unit, any, [](double t, double tt) {
    return tt * (std::log(tt) - std::log(t) - 1.0) - kl(tt, t);
  }));
  out.push_back(
      over_pairs(make_report("entropy.v.sym", "theta,theta_tilde"), unit, unit, any, [](double t, double tt) {
        return (1.0 - tt) * (std::log1p(-tt) - std::log1p(-t) - 1.0) - kl(tt, t);
      }));
  // (vi) D(t || t~) <= t~ / 2 for t <= t~ <= 1/2
  out.push_back(over_pairs(make_report("entropy.vi", "theta,theta_tilde"), lower_half, lower_half,
                           [](double t, double tt) { return t <= tt; },
                           [](double t, double tt) { return kl(t, tt) - 0.5 * tt; }));
  out.push_back(over_pairs(make_report("entropy.vi.sym", "theta,theta_tilde"), upper_half, upper_half,
                           [](double t, double tt) { return tt <= t; },
                           [](double t, double tt) { return kl(t, tt) - 0.5 * (1.0 - tt); }));
  // (vii), (viii)
  out.push_back(lemma_vii(grid_density, false));
  out.push_back(lemma_vii(grid_density, true));
  out.push_back(lemma_viii(grid_density, false));
  out.push_back(lemma_viii(grid_density, true));

  out.push_back(over_pairs(
      make_report("entropy.vi.const2", "theta,theta_tilde",
                  "informational: (vi) with constant 2 in place of 1/2; not part of the stated inequality set"),
      lower_half, lower_half, [](double t, double tt) { return t <= tt; },
      [](double t, double tt) { return kl(t, tt) - 2.0 * tt; }));
  return out;
}

InequalityReport check_binomial_sandwich(std::size_t n_max, double theta0) {
  if (!(theta0 > 0.0 && theta0 < 1.0)) throw std::invalid_argument("binomial sandwich needs theta0 in (0,1)");
  auto rep = make_report("binomial.sandwich", "n,k,theta0", "slack in log space");
  for (std::size_t n = 2; n <= n_max; ++n) {
    const auto dn = static_cast<double>(n);
    for (std::size_t k = 1; k < n; ++k) {
      const double a = static_cast<double>(k) / dn;
      const double log_p = log_binomial_pmf(n, k, theta0);
      const double exponent = -dn * kl(a, theta0);
      const double var = a * (1.0 - a) * dn;
      const double log_upper = exponent - 0.5 * std::log(2.0 * std::numbers::pi * var);
      const double log_lower = exponent - 0.5 * std::log(8.0 * var);
      rep.record(std::max(log_p - log_upper, log_lower - log_p), {dn, static_cast<double>(k), theta0});
    }
  }
  return rep;
}

SqrtExpSums sum_sqrt_exp(double z) {
  if (!(z > 0.0)) throw std::invalid_argument("sum_sqrt_exp needs z > 0");
  const double z2 = z * z;
  const double peak = 1.0 / (2.0 * z2);
  SqrtExpSums s;
  double last1 = 0.0;
  double last2 = 0.0;
  std::size_t n = 1;
  for (;; ++n) {
    const auto dn = static_cast<double>(n);
    const double e = std::exp(-z2 * dn);
    last1 = std::sqrt(dn) * e;
    last2 = e / std::sqrt(dn);
    s.s1 += last1;
    s.s2 += last2;
    const bool past_peak = dn > peak;
    if (past_peak && last1 <= 1e-18 * s.s1 && last2 <= 1e-18 * s.s2) break;
    if (last1 == 0.0 && last2 == 0.0) break;
  }
  s.terms = n;
  // Past the peak the term ratio of S1 is at most sqrt((n+1)/n) e^{-z^2}; S2 decays at least like e^{-z^2}.
  const auto dn = static_cast<double>(n);
  const double q1 = std::sqrt((dn + 1.0) / dn) * std::exp(-z2);
  const double q2 = std::exp(-z2);
  s.s1_tail = q1 < 1.0 ? last1 * q1 / (1.0 - q1) : std::numeric_limits<double>::infinity();
  s.s2_tail = last2 * q2 / (1.0 - q2);
  return s;
}

InequalityReport check_sum_sqrt_exp(double z) {
  if (!(z > 0.0)) throw std::invalid_argument("check_sum_sqrt_exp needs z > 0");
  auto rep = make_report("sqrt_exp_sums", "z,bound_index", "slack relative to max(1,|bound|)");
  const auto s = sum_sqrt_exp(z);
  const double centre = std::sqrt(std::numbers::pi) / (2.0 * z * z * z);
  const double spread = 1.0 / (z * std::sqrt(2.0 * std::numbers::e));
  const double lower = centre - spread;
  const double upper = centre + spread;
  const double s2_bound = std::sqrt(std::numbers::pi) / z;
  auto scaled = [](double diff, double bound) { return diff / std::max(1.0, std::abs(bound)); };
  rep.record(scaled(lower - s.s1, lower), {z, 0.0});
  rep.record(scaled(s.s1 + s.s1_tail - upper, upper), {z, 1.0});
  rep.record(scaled(s.s2 + s.s2_tail - s2_bound, s2_bound), {z, 2.0});
  return rep;
}

}  // namespace mdl
