#include "mdl/loss_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "mdl/divergence.hpp"
#include "mdl/parallel.hpp"

namespace mdl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Bayes sums skip k whose log-probability is this far below the mode.
constexpr double kBayesWindowNats = 45.0;
// Members whose log-joint is this far below the running maximum are dropped.
constexpr double kPosteriorCutNats = 40.0;
constexpr double kRegionRelativeStop = 1e-13;
constexpr double kRegionAbsoluteStop = 1e-290;
constexpr std::uint64_t kMonteCarloMapLimit = 4096;
constexpr std::uint64_t kMonteCarloBlock = 64;

class Neumaier {
 public:
  void add(long double x) {
    const long double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  long double value() const { return sum_ + carry_; }

 private:
  long double sum_ = 0.0L;
  long double carry_ = 0.0L;
};

// log C(n,k) theta^k (1-theta)^(n-k) with a cached log-factorial table.
class PmfTable {
 public:
  PmfTable(std::uint64_t n_max, double theta) : theta_(theta), log_fact_(n_max + 1) {
    for (std::uint64_t i = 0; i <= n_max; ++i) log_fact_[i] = boost::math::lgamma(static_cast<double>(i) + 1.0);
    log_theta_ = theta > 0.0 ? std::log(theta) : -kInf;
    log_comp_ = theta < 1.0 ? std::log1p(-theta) : -kInf;
  }

  double log_pmf(std::uint64_t n, std::uint64_t k) const {
    if (theta_ == 0.0) return k == 0 ? 0.0 : -kInf;
    if (theta_ == 1.0) return k == n ? 0.0 : -kInf;
    double v = log_fact_[n] - log_fact_[k] - log_fact_[n - k];
    if (k != 0) v += static_cast<double>(k) * log_theta_;
    if (k != n) v += static_cast<double>(n - k) * log_comp_;
    return v;
  }

  std::uint64_t mode(std::uint64_t n) const {
    return std::min<std::uint64_t>(n, static_cast<std::uint64_t>(std::floor(static_cast<double>(n + 1) * theta_)));
  }

 private:
  double theta_;
  std::vector<double> log_fact_;
  double log_theta_ = 0.0;
  double log_comp_ = 0.0;
};

std::vector<double> squared_distances(const ModelClass& cls, std::size_t theta0_index) {
  std::vector<double> d2(cls.size());
  for (std::size_t i = 0; i < cls.size(); ++i) d2[i] = cls.squared_distance(i, theta0_index);
  return d2;
}

void check_true_index(const ModelClass& cls, std::size_t theta0_index) {
  if (theta0_index >= cls.size()) throw std::invalid_argument("true parameter index out of range");
}

double selection_loss_direct(const DecisionMap& map, const std::vector<double>& d2, const PmfTable& pmf) {
  const std::uint64_t n = map.n();
  Neumaier acc;
  for (const auto& r : map.regions()) {
    if (d2[r.member] == 0.0) continue;
    Neumaier mass;
    for (std::uint64_t k = r.k_lo; k <= r.k_hi; ++k) mass.add(std::exp(pmf.log_pmf(n, k)));
    acc.add(mass.value() * d2[r.member]);
  }
  return static_cast<double>(acc.value());
}

double selection_loss_regions(const DecisionMap& map, const std::vector<double>& d2, double theta0) {
  const std::uint64_t n = map.n();
  const auto regions = map.regions();
  const std::size_t count = regions.size();

  // Largest squared distance among the regions left of / right of each index.
  std::vector<double> max_left(count + 1, 0.0);
  std::vector<double> max_right(count + 1, 0.0);
  for (std::size_t j = 0; j < count; ++j) max_left[j + 1] = std::max(max_left[j], d2[regions[j].member]);
  for (std::size_t j = count; j-- > 0;) max_right[j] = std::max(max_right[j + 1], d2[regions[j].member]);
  if (max_left[count] == 0.0) return 0.0;

  const double mean = static_cast<double>(n) * theta0;
  const auto mean_k = static_cast<std::uint64_t>(std::clamp(std::floor(mean), 0.0, static_cast<double>(n)));
  std::size_t centre = 0;
  while (centre + 1 < count && regions[centre].k_hi < mean_k) ++centre;

  // P(K < k) and P(K > k); each boundary is evaluated once and shared by the
  // two regions it separates.
  auto below = [&](std::uint64_t k) { return k == 0 ? 0.0 : binomial_tail(n, 0, k - 1, theta0); };
  auto above = [&](std::uint64_t k) { return k >= n ? 0.0 : binomial_tail(n, k + 1, n, theta0); };
  auto negligible = [&](double tail, double worst, double acc) {
    return tail * worst < kRegionAbsoluteStop || tail * worst <= kRegionRelativeStop * acc;
  };

  const DecisionRegion& mid = regions[centre];
  double left_tail = below(mid.k_lo);
  double right_tail = above(mid.k_hi);
  const double centre_value = std::max(0.0, 1.0 - left_tail - right_tail) * d2[mid.member];

  Neumaier left;
  for (std::size_t j = centre; j-- > 0;) {
    if (negligible(left_tail, max_left[j + 1], centre_value + static_cast<double>(left.value()))) break;
    const double next = below(regions[j].k_lo);
    left.add(std::max(0.0, left_tail - next) * d2[regions[j].member]);
    left_tail = next;
  }
  Neumaier right;
  for (std::size_t j = centre + 1; j < count; ++j) {
    if (negligible(right_tail, max_right[j], centre_value + static_cast<double>(right.value()))) break;
    const double next = above(regions[j].k_hi);
    right.add(std::max(0.0, right_tail - next) * d2[regions[j].member]);
    right_tail = next;
  }
  Neumaier total;
  total.add(left.value());
  total.add(centre_value);
  total.add(right.value());
  return static_cast<double>(total.value());
}

// Posterior mean with members far below the posterior peak skipped. The data
// log-likelihood is concave in theta with its peak at k/n, so walking out from
// there it only decreases.
double bayes_predictive_pruned(const ModelClass& cls, std::uint64_t n, std::uint64_t k) {
  const std::size_t m = cls.size();
  const double alpha = n == 0 ? 0.5 : static_cast<double>(k) / static_cast<double>(n);
  const double best_log_weight = -cls.min_kw() * std::numbers::ln2;
  auto data_term = [&](std::size_t i) {
    double d = 0.0;
    if (k != 0) d += static_cast<double>(k) * cls.log_value(i);
    if (k != n) d += static_cast<double>(n - k) * cls.log_complement(i);
    return d;
  };

  std::size_t split = 0;
  {
    std::size_t lo = 0;
    std::size_t hi = m;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cls.value(mid) < alpha) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    split = lo;
  }

  std::vector<std::pair<double, std::size_t>> kept;
  double top = -kInf;
  auto visit = [&](std::size_t i) {
    const double d = data_term(i);
    if (d + best_log_weight < top - kPosteriorCutNats || d == -kInf) return false;
    const double lj = d - cls.kw(i) * std::numbers::ln2;
    top = std::max(top, lj);
    kept.emplace_back(lj, i);
    return true;
  };
  for (std::size_t i = split; i < m; ++i) {
    if (!visit(i)) break;
  }
  for (std::size_t i = split; i-- > 0;) {
    if (!visit(i)) break;
  }
  if (kept.empty()) throw std::domain_error("mixture has zero mass at this observation");

  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  double mass = 0.0;
  double mean = 0.0;
  for (const auto& [lj, i] : kept) {
    const double w = std::exp(lj - top);
    mass += w;
    mean += w * cls.value(i);
  }
  return std::clamp(mean / mass, cls.value(0), cls.value(m - 1));
}

double bayes_loss(const ModelClass& cls, double theta0, std::uint64_t n, const PmfTable& pmf) {
  const std::uint64_t mode = pmf.mode(n);
  const double cut = pmf.log_pmf(n, mode) - kBayesWindowNats;
  std::uint64_t lo = mode;
  while (lo > 0 && pmf.log_pmf(n, lo - 1) >= cut) --lo;
  std::uint64_t hi = mode;
  while (hi < n && pmf.log_pmf(n, hi + 1) >= cut) ++hi;

  Neumaier acc;
  for (std::uint64_t k = lo; k <= hi; ++k) {
    const double diff = bayes_predictive_pruned(cls, n, k) - theta0;
    acc.add(std::exp(pmf.log_pmf(n, k)) * diff * diff);
  }
  return static_cast<double>(acc.value());
}

double loss_at(const ModelClass& cls, std::size_t theta0_index, std::uint64_t n, Rule rule,
               const EngineOptions& options, const std::vector<double>& d2, const PmfTable& pmf) {
  const double theta0 = cls.value(theta0_index);
  if (rule == Rule::bayes) return bayes_loss(cls, theta0, n, pmf);
  const DecisionMap map(cls, n, rule == Rule::ml);
  if (n <= options.enumeration_threshold) return selection_loss_direct(map, d2, pmf);
  return selection_loss_regions(map, d2, theta0);
}

// Continues the dyadic block sums B1 = sum over (H/4, H/2] and B2 = sum over
// (H/2, H] geometrically: a loss decaying like n^-p has B2/B1 = 2^(1-p), and
// the remainder beyond H is then B2 r / (1 - r) with r = B2/B1.
double tail_block_ratio(const std::vector<double>& per_n, std::string& method) {
  const std::size_t h = per_n.size();
  if (h < 8) {
    method = "none (horizon too short to extrapolate)";
    return kInf;
  }
  method = "geometric continuation of the loss sums over (H/4,H/2] and (H/2,H]";
  Neumaier b1;
  Neumaier b2;
  for (std::size_t i = h / 4; i < h / 2; ++i) b1.add(per_n[i]);
  for (std::size_t i = h / 2; i < h; ++i) b2.add(per_n[i]);
  const auto s1 = static_cast<double>(b1.value());
  const auto s2 = static_cast<double>(b2.value());
  if (s2 == 0.0) return 0.0;
  if (s2 >= s1) return kInf;
  const double r = s2 / s1;
  return s2 * r / (1.0 - r);
}

}  // namespace

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double instantaneous_loss(const ModelClass& cls, std::size_t theta0_index, std::uint64_t n, Rule rule,
                          const EngineOptions& options) {
  check_true_index(cls, theta0_index);
  if (n == 0) throw std::invalid_argument("instantaneous loss needs n >= 1");
  const PmfTable pmf(n, cls.value(theta0_index));
  return loss_at(cls, theta0_index, n, rule, options, squared_distances(cls, theta0_index), pmf);
}

double instantaneous_loss_exact(const ModelClass& cls, std::size_t theta0_index, std::uint64_t n,
                                const EngineOptions& options) {
  return instantaneous_loss(cls, theta0_index, n, Rule::mdl, options);
}

LossCurve cumulative_loss(const ModelClass& cls, std::size_t theta0_index, std::uint64_t horizon, Rule rule,
                          const EngineOptions& options) {
  check_true_index(cls, theta0_index);
  if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");

  LossCurve curve;
  curve.horizon = horizon;
  curve.predictor = rule;
  curve.per_n.assign(horizon, 0.0);
  const auto d2 = squared_distances(cls, theta0_index);
  const PmfTable pmf(horizon, cls.value(theta0_index));
  parallel_for(horizon, options.threads, [&](std::size_t i) {
    curve.per_n[i] = loss_at(cls, theta0_index, i + 1, rule, options, d2, pmf);
  });

  curve.cumulative.reserve(horizon);
  Neumaier acc;
  for (double v : curve.per_n) {
    acc.add(v);
    curve.cumulative.push_back(static_cast<double>(acc.value()));
  }

  curve.truncation_note = "sum over n = 1.." + std::to_string(horizon) + " only; the tail estimate is not included";
  if (rule == Rule::bayes) {
    const double budget = cls.kw(theta0_index) * std::numbers::ln2;
    curve.tail_estimate = std::max(0.0, budget - curve.total());
    curve.tail_method = "ln(1/w0) minus the accumulated loss, floored at 0";
  } else {
    curve.tail_estimate = tail_block_ratio(curve.per_n, curve.tail_method);
  }
  return curve;
}

MonteCarloResult monte_carlo_loss(const ModelClass& cls, std::size_t theta0_index, std::uint64_t horizon,
                                  std::uint64_t paths, std::uint64_t seed, unsigned threads, bool with_curve) {
  check_true_index(cls, theta0_index);
  if (paths == 0) throw std::invalid_argument("Monte Carlo needs at least one path");
  if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");
  const auto d2 = squared_distances(cls, theta0_index);
  const double theta0 = cls.value(theta0_index);

  // Short horizons reuse one decision map per n across all paths.
  std::vector<DecisionMap> maps;
  if (horizon <= kMonteCarloMapLimit) {
    maps.reserve(horizon);
    for (std::uint64_t n = 1; n <= horizon; ++n) maps.emplace_back(cls, n);
  }
  auto select_at = [&](std::uint64_t n, std::uint64_t k) {
    return maps.empty() ? mdl_select(cls, {n, k}) : maps[n - 1].lookup(k);
  };

  // The path index is XORed into a mixed copy of the seed. XORing it into
  // the raw seed would make seeds that differ only in low bits replay the
  // same set of paths in a different order.
  const std::uint64_t base = SplitMix64(seed).next();

  // Paths are grouped in fixed blocks; each block sums its paths in order,
  // so the per-n totals do not depend on how blocks are scheduled.
  const std::uint64_t blocks = (paths + kMonteCarloBlock - 1) / kMonteCarloBlock;
  std::vector<double> per_path(paths);
  std::vector<std::vector<double>> block_curves(with_curve ? blocks : 0);
  parallel_for(blocks, threads, [&](std::size_t b) {
    std::vector<double> curve(with_curve ? horizon : 0, 0.0);
    const std::uint64_t first = b * kMonteCarloBlock;
    const std::uint64_t last = std::min(paths, first + kMonteCarloBlock);
    for (std::uint64_t p = first; p < last; ++p) {
      SplitMix64 rng(base ^ p);
      std::uint64_t k = 0;
      double sum = 0.0;
      for (std::uint64_t n = 1; n <= horizon; ++n) {
        if (rng.uniform() < theta0) ++k;
        const double loss = d2[select_at(n, k)];
        sum += loss;
        if (with_curve) curve[n - 1] += loss;
      }
      per_path[p] = sum;
    }
    if (with_curve) block_curves[b] = std::move(curve);
  });

  Neumaier total;
  for (double v : per_path) total.add(v);
  const double mean = static_cast<double>(total.value()) / static_cast<double>(paths);
  Neumaier sq;
  for (double v : per_path) sq.add((v - mean) * (v - mean));
  const double var = paths > 1 ? static_cast<double>(sq.value()) / static_cast<double>(paths - 1) : 0.0;

  MonteCarloResult out;
  out.estimate = mean;
  out.std_error = std::sqrt(var / static_cast<double>(paths));
  out.paths = paths;
  out.seed = seed;
  if (with_curve) {
    out.per_n.resize(horizon);
    for (std::uint64_t n = 0; n < horizon; ++n) {
      Neumaier acc;
      for (const auto& c : block_curves) acc.add(c[n]);
      out.per_n[n] = static_cast<double>(acc.value()) / static_cast<double>(paths);
    }
  }
  return out;
}

double instantaneous_bound(std::uint64_t n, double kw0) {
  if (n < 3) throw std::invalid_argument("instantaneous_bound needs n >= 3");
  if (kw0 < 0.0) throw std::invalid_argument("instantaneous_bound needs kw0 >= 0");
  const double dn = static_cast<double>(n);
  const double ln_n = std::log(dn);
  return std::numbers::ln2 * kw0 / (2.0 * dn) + std::sqrt(2.0 * std::numbers::ln2 * kw0 * ln_n) / dn +
         6.0 * ln_n / dn;
}

double previous_bound(double kw0) {
  if (kw0 < 0.0) throw std::invalid_argument("previous_bound needs kw0 >= 0");
  return std::exp2(kw0);
}

}  // namespace mdl
