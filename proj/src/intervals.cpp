#include "mdl/intervals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mdl/divergence.hpp"
#include "mdl/parallel.hpp"

namespace mdl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lowest-Kw member inside [lo, hi); ties keep the smaller parameter.
std::optional<std::size_t> argmin_kw(const ModelClass& cls, const DyadicInterval& iv) {
  const std::size_t first = cls.lower_bound(Parameter(iv.lo));
  const std::size_t last = cls.lower_bound(Parameter(iv.hi));
  std::optional<std::size_t> best;
  for (std::size_t i = first; i < last; ++i) {
    if (!best || cls.kw(i) < cls.kw(*best)) best = i;
  }
  return best;
}

std::optional<std::size_t> argmin_kw(const ModelClass& cls, const std::vector<DyadicInterval>& parts) {
  std::optional<std::size_t> best;
  for (const auto& part : parts) {
    const auto cand = argmin_kw(cls, part);
    if (cand && (!best || cls.kw(*cand) < cls.kw(*best) || (cls.kw(*cand) == cls.kw(*best) && *cand < *best))) {
      best = cand;
    }
  }
  return best;
}

double kw_or_inf(const ModelClass& cls, const std::optional<std::size_t>& i) { return i ? cls.kw(*i) : kInf; }

// inf over x in [lo, hi) of |x - t|.
Rational distance(const Rational& t, const DyadicInterval& iv) {
  if (t < iv.lo) return iv.lo - t;
  if (t >= iv.hi) return t - iv.hi;
  return 0;
}

// sup over x in [lo, hi) of |x - t|.
Rational reach(const Rational& t, const DyadicInterval& iv) {
  return std::max(Rational(abs(iv.lo - t)), Rational(abs(iv.hi - t)));
}

Rational interval_gap(const DyadicInterval& a, const DyadicInterval& b) {
  if (a.hi <= b.lo) return b.lo - a.hi;
  if (b.hi <= a.lo) return a.lo - b.hi;
  return 0;
}

double series_term(double delta) {
  if (delta == 0.0 || std::isinf(delta)) return 0.0;
  return std::exp2(-delta) * std::sqrt(delta);
}

InequalityReport exact_report(std::string id, std::string coords, std::string note) {
  InequalityReport r;
  r.id = std::move(id);
  r.coordinates = std::move(coords);
  r.note = std::move(note);
  r.tolerance = 0.0;
  return r;
}

InequalityReport sampled_report(std::string id, std::string coords, std::string note) {
  InequalityReport r;
  r.id = std::move(id);
  r.coordinates = std::move(coords);
  r.note = std::move(note);
  return r;
}

// Points lo + (hi - lo) i / 64 for i < 64, plus one just below hi.
std::vector<double> half_open_samples(const DyadicInterval& iv) {
  std::vector<double> out;
  const Rational len = iv.length();
  for (int i = 0; i < 64; ++i) out.push_back(to_double(iv.lo + len * i / 64));
  out.push_back(to_double(iv.hi - len / 4096));
  return out;
}

}  // namespace

std::string DyadicInterval::to_string() const {
  return "[" + Parameter(lo).to_string() + ", " + Parameter(hi).to_string() + ")";
}

std::vector<IntervalStep> build_intervals(const Parameter& theta0, unsigned steps) {
  if (!theta0.is_interior()) throw std::invalid_argument("interval construction needs theta0 in (0,1)");
  if (steps > kMaxIntervalSteps) {
    throw std::invalid_argument("at most " + std::to_string(kMaxIntervalSteps) + " interval steps");
  }
  const Rational& t = theta0.value();
  std::vector<IntervalStep> out;
  out.reserve(steps);
  DyadicInterval J{Rational(0), Rational(1)};
  for (unsigned k = 1; k <= steps; ++k) {
    const Rational lo = J.lo;
    const Rational d = J.length();
    IntervalStep step;
    step.k = k;
    if (t < lo + d * 3 / 8) {
      step.kind = StepKind::l;
      step.J = {lo, lo + d / 2};
      step.I = {{lo + d / 2, J.hi}};
    } else if (t < lo + d * 5 / 8) {
      step.kind = StepKind::c;
      step.J = {lo + d / 4, lo + d * 3 / 4};
      step.I = {{lo, lo + d / 4}, {lo + d * 3 / 4, J.hi}};
    } else {
      step.kind = StepKind::r;
      step.J = {lo + d / 2, J.hi};
      step.I = {{lo, lo + d / 2}};
    }
    J = step.J;
    out.push_back(std::move(step));
  }
  return out;
}

unsigned k0(const Parameter& theta0) {
  if (!theta0.is_interior()) throw std::invalid_argument("k0 needs theta0 in (0,1)");
  const Rational t = theta0.value() <= Rational(1, 2) ? theta0.value() : Rational(1 - theta0.value());
  unsigned m = 0;
  Rational scaled = t * 8;  // 4 t 2^(m+1)
  while (scaled <= 3) {
    ++m;
    scaled *= 2;
  }
  return m;
}

DeltaProfile delta_profile(const ModelClass& cls, std::size_t theta0_index, unsigned steps) {
  if (theta0_index >= cls.size()) throw std::invalid_argument("true parameter index out of range");
  DeltaProfile profile;
  profile.theta0_index = theta0_index;
  profile.steps = build_intervals(cls[theta0_index].param, steps);
  for (const auto& step : profile.steps) {
    DeltaEntry e;
    e.k = step.k;
    e.theta_J = *argmin_kw(cls, step.J);  // theta0 itself lies in J_k
    e.theta_I = argmin_kw(cls, step.I);
    e.delta = e.theta_I ? std::max(cls.kw(*e.theta_I) - cls.kw(e.theta_J), 0.0) : kInf;
    profile.entries.push_back(e);
  }
  return profile;
}

double delta_series_sum(const std::vector<double>& deltas) {
  double sum = 0.0;
  for (double d : deltas) sum += series_term(d);
  return sum;
}

MainBound main_bound(const ModelClass& cls, std::size_t theta0_index, unsigned steps) {
  const DeltaProfile profile = delta_profile(cls, theta0_index, steps);
  MainBound out;
  out.kw0 = cls.kw(theta0_index);
  double tail = 0.0;
  double sharp = 0.0;
  const std::size_t n = profile.entries.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double delta = profile.entries[j].delta;
    const double term = series_term(delta);
    out.series += term;
    if (j + 32 >= n) tail += term;
    if (!std::isinf(delta)) sharp += std::exp2(-delta);
  }
  out.value = out.kw0 + out.series;
  out.conjectured = out.kw0 + sharp;
  out.truncated = tail > 1e-9;
  return out;
}

UniformCondition check_uniform_condition(const ModelClass& cls, std::size_t theta0_index, double a, double b,
                                         unsigned k_max) {
  if (theta0_index >= cls.size()) throw std::invalid_argument("true parameter index out of range");
  if (a < 1.0 || b < 0.0) throw std::invalid_argument("uniform condition needs a >= 1 and b >= 0");
  if (k_max > cls.resolution_bits()) {
    throw std::invalid_argument("k_max=" + std::to_string(k_max) + " exceeds the class resolution of " +
                                std::to_string(cls.resolution_bits()) + " bits");
  }
  UniformCondition out;
  out.k_max = k_max;
  const double start = a * cls.kw(theta0_index) + b;
  out.k_first = static_cast<unsigned>(std::floor(start)) + 1;
  const Rational& t = cls[theta0_index].param.value();
  for (unsigned k = out.k_first; k <= k_max; ++k) {
    const Rational r = dyadic_unit(k);
    const Rational lo = std::max(Rational(0), Rational(t - r));
    const Rational hi = std::min(Rational(1), Rational(t + r));
    const std::size_t first = cls.lower_bound(Parameter(lo));
    const std::size_t last = cls.upper_bound(Parameter(hi));
    double min_kw = kInf;
    for (std::size_t i = first; i < last; ++i) {
      if (i != theta0_index) min_kw = std::min(min_kw, cls.kw(i));
    }
    if (min_kw < (static_cast<double>(k) - b) / a) {
      out.holds = false;
      out.first_violation = k;
      break;
    }
  }
  return out;
}

double finite_class_bound(const ModelClass& cls, std::size_t theta0_index) {
  if (theta0_index >= cls.size()) throw std::invalid_argument("true parameter index out of range");
  return static_cast<double>(cls.size()) + cls.kw(theta0_index);
}

double extended_kl_close(double alpha, double theta_tilde, double theta) {
  const double delta = theta_tilde - theta;
  const double u = delta / theta;
  const double v = -delta / (1.0 - theta);
  const double linear = delta * (alpha - theta) / (theta * (1.0 - theta));
  return linear - (alpha * log1p_remainder(u) + (1.0 - alpha) * log1p_remainder(v));
}

std::vector<InequalityReport> check_appendix_lemmas(const std::vector<Parameter>& theta0_grid,
                                                    const std::vector<ModelClass>& classes,
                                                    const AppendixCheckOptions& options) {
  const unsigned k_max = options.k_max;
  if (k_max + 6 > kMaxIntervalSteps) throw std::invalid_argument("k_max too large for the interval construction");

  // Exact interval properties, one slot per theta0 so the reduction is ordered.
  const std::size_t g = theta0_grid.size();
  std::vector<std::array<InequalityReport, 5>> per_theta(g);
  parallel_for(g, options.threads, [&](std::size_t idx) {
    const Parameter& p = theta0_grid[idx];
    const Rational& t = p.value();
    const double td = p.to_double();
    auto& reps = per_theta[idx];
    reps[0] = exact_report("interval.partition", "theta0,k", "J_k and I_k partition J_{k-1} and theta0 stays in J_k");
    reps[1] = exact_report("interval.length", "theta0,k", "|J_k| - 2^-k, must be 0");
    reps[2] = exact_report("interval.gap_to_truth", "theta0,k", "2^-(k+2) - d(theta0, I_k)");
    reps[3] = exact_report("interval.reach", "theta0,k", "sup |theta - theta0| over I_k minus 2^-(k-1)");
    reps[4] = exact_report("interval.nested_gap", "theta0,k", "15 * 2^-(k+6) - d(J_{k+5}, I_k)");
    const auto steps = build_intervals(p, k_max + 5);
    DyadicInterval prev{Rational(0), Rational(1)};
    for (unsigned k = 1; k <= k_max; ++k) {
      const auto& s = steps[k - 1];
      const std::vector<double> pt{td, static_cast<double>(k)};
      // Partition: pieces tile prev exactly, ordered by position.
      std::vector<DyadicInterval> pieces = s.I;
      pieces.push_back(s.J);
      std::sort(pieces.begin(), pieces.end(), [](const auto& x, const auto& y) { return x.lo < y.lo; });
      bool tiles = pieces.front().lo == prev.lo && pieces.back().hi == prev.hi;
      for (std::size_t j = 1; j < pieces.size(); ++j) tiles = tiles && pieces[j - 1].hi == pieces[j].lo;
      reps[0].record(tiles && s.J.contains(t) ? 0.0 : 1.0, pt);

      reps[1].record(std::abs(to_double(s.J.length() - dyadic_unit(k))), pt);
      Rational d_truth = distance(t, s.I.front());
      Rational far = reach(t, s.I.front());
      Rational d_nested = interval_gap(steps[k + 4].J, s.I.front());
      for (std::size_t j = 1; j < s.I.size(); ++j) {
        d_truth = std::min(d_truth, distance(t, s.I[j]));
        far = std::max(far, reach(t, s.I[j]));
        d_nested = std::min(d_nested, interval_gap(steps[k + 4].J, s.I[j]));
      }
      reps[2].record(to_double(dyadic_unit(k + 2) - d_truth), pt);
      reps[3].record(to_double(far - dyadic_unit(k - 1)), pt);
      reps[4].record(to_double(dyadic_unit(k + 6) * 15 - d_nested), pt);
      prev = s.J;
    }
  });
  std::array<InequalityReport, 5> interval_reports = g > 0 ? per_theta[0] : std::array<InequalityReport, 5>{};
  for (std::size_t idx = 1; idx < g; ++idx) {
    for (std::size_t r = 0; r < 5; ++r) interval_reports[r].merge(per_theta[idx][r]);
  }

  // Interval optima on each class.
  auto opt_i = sampled_report("optima.j_below_truth", "class,k", "Kw(theta^J_k) - Kw(theta0)");
  auto opt_ii = sampled_report("optima.j_monotone", "class,k", "Kw(theta^J_k) - Kw(theta^J_{k+6})");
  auto opt_iii = sampled_report("optima.i_above_j", "class,k", "Kw(theta^J_k) - Kw(theta^I_{k+1})");
  auto opt_iv = sampled_report("optima.gap_sum", "class",
                               "sum_k max{Kw(theta^J_{k+5}) - Kw(theta^I_k), 0} - 6 Kw(theta0)");
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const ModelClass& cls = classes[c];
    const std::size_t t0 = cls.require_true_index();
    if (!cls[t0].param.is_interior()) continue;
    const unsigned span = std::max(k_max, cls.resolution_bits() + 8);
    const unsigned steps = std::min(span + 6, kMaxIntervalSteps);
    const DeltaProfile prof = delta_profile(cls, t0, steps);
    const auto& e = prof.entries;
    const double kw0 = cls.kw(t0);
    double gap_sum = 0.0;
    for (unsigned k = 1; k + 6 <= steps; ++k) {
      const std::vector<double> pt{static_cast<double>(c), static_cast<double>(k)};
      const double kj = cls.kw(e[k - 1].theta_J);
      opt_i.record(kj - kw0, pt);
      opt_ii.record(kj - cls.kw(e[k + 5].theta_J), pt);
      opt_iii.record(kj - kw_or_inf(cls, e[k].theta_I), pt);
      gap_sum += std::max(cls.kw(e[k + 4].theta_J) - kw_or_inf(cls, e[k - 1].theta_I), 0.0);
    }
    opt_iv.record(gap_sum - 6.0 * kw0, {static_cast<double>(c)});
  }

  // Sampled extended-divergence bounds.
  std::vector<Parameter> sampled(theta0_grid.begin(),
                                 theta0_grid.begin() + static_cast<std::ptrdiff_t>(std::min(options.sampled_theta0, g)));
  const unsigned far_k_cap = std::min(k_max, 40u);
  std::vector<InequalityReport> far_reports(sampled.size());
  std::vector<InequalityReport> near_reports(sampled.size());
  parallel_for(sampled.size(), options.threads, [&](std::size_t idx) {
    auto far = sampled_report("ext_kl.far", "theta0,k,theta,alpha",
                              "relative slack of D^alpha(theta0||theta) >= 2^-(k+4), k <= k0-5");
    auto near = sampled_report("ext_kl.near", "theta0,k,theta,theta_tilde,alpha",
                               "relative slack of D^alpha(theta_tilde||theta) >= 2^-(2k+5), k >= k0-4");
    const Parameter& p = sampled[idx];
    const unsigned kz = k0(p);
    // Both statements are written for theta0 <= 1/2; mirror the rest.
    const Parameter low = p.value() <= Rational(1, 2) ? p : p.complement();
    const double t0 = low.to_double();

    for (unsigned k = 1; k + 5 <= kz && k <= far_k_cap; ++k) {
      const unsigned k1 = k + static_cast<unsigned>(std::ceil(std::log2(static_cast<double>(kz - k - 3)))) + 2;
      const double bound = std::exp2(-static_cast<double>(k) - 4.0);
      std::vector<double> thetas;
      const double start = std::exp2(-static_cast<double>(k));
      for (int i = 0; i <= 64; ++i) thetas.push_back(start + (1.0 - start) * i / 65.0);
      for (int i = 1; i <= 16; ++i) thetas.push_back(start * (1.0 + std::exp2(-i)));
      const double a_max = std::exp2(-static_cast<double>(k1));
      for (double th : thetas) {
        for (int i = 0; i <= 64; ++i) {
          const double alpha = a_max * i / 64.0;
          const double value = extended_kl_close(alpha, t0, th);
          far.record((bound - value) / bound, {p.to_double(), static_cast<double>(k), th, alpha});
        }
      }
    }

    const auto steps = build_intervals(low, std::min(k_max, 40u) + 5);
    for (unsigned k = kz >= 5 ? kz - 4 : 1; k <= std::min(k_max, 40u); ++k) {
      const auto& s = steps[k - 1];
      const auto& inner = steps[k + 4].J;
      const double bound = std::exp2(-2.0 * k - 5.0);
      std::vector<double> thetas;
      for (const auto& part : s.I) {
        for (double th : half_open_samples(part)) {
          if (th > 0.0 && th < 1.0) thetas.push_back(th);
        }
      }
      const auto tildes = half_open_samples(inner);
      // Affine in alpha, so the ends of the closure of J_{k+5} carry the minimum.
      const std::vector<double> alphas{to_double(inner.lo), to_double((inner.lo + inner.hi) / 2), to_double(inner.hi)};
      for (double th : thetas) {
        for (double tt : tildes) {
          if (!(tt > 0.0)) continue;
          for (double alpha : alphas) {
            const double value = extended_kl_close(alpha, tt, th);
            near.record((bound - value) / bound, {p.to_double(), static_cast<double>(k), th, tt, alpha});
          }
        }
      }
    }
    far_reports[idx] = std::move(far);
    near_reports[idx] = std::move(near);
  });

  auto fold = [](std::vector<InequalityReport>& parts, InequalityReport base) {
    for (const auto& r : parts) base.merge(r);
    return base;
  };
  auto far_all = fold(far_reports, sampled_report("ext_kl.far", "theta0,k,theta,alpha",
                                                  "relative slack of D^alpha(theta0||theta) >= 2^-(k+4), k <= k0-5"));
  auto near_all =
      fold(near_reports, sampled_report("ext_kl.near", "theta0,k,theta,theta_tilde,alpha",
                                        "relative slack of D^alpha(theta_tilde||theta) >= 2^-(2k+5), k >= k0-4"));

  std::vector<InequalityReport> out(interval_reports.begin(), interval_reports.end());
  out.push_back(std::move(opt_i));
  out.push_back(std::move(opt_ii));
  out.push_back(std::move(opt_iii));
  out.push_back(std::move(opt_iv));
  out.push_back(std::move(far_all));
  out.push_back(std::move(near_all));
  return out;
}

}  // namespace mdl
