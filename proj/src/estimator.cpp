#include "mdl/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mdl/divergence.hpp"

namespace mdl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_obs(const ObservationSummary& obs) {
  if (obs.k > obs.n) {
    throw std::invalid_argument("observation has k=" + std::to_string(obs.k) + " > n=" + std::to_string(obs.n));
  }
}

// -ln P(x | theta_i) + penalty; the binomial coefficient and the entropy of
// k/n are common to every member and left out. Only used to shortlist.
double rough_score(const ModelClass& cls, std::size_t i, const ObservationSummary& obs, bool use_kw) {
  const auto k = static_cast<double>(obs.k);
  const auto rest = static_cast<double>(obs.n - obs.k);
  double s = use_kw ? cls.kw(i) * std::numbers::ln2 : 0.0;
  if (obs.k != 0) s -= k * cls.log_value(i);
  if (obs.n != obs.k) s -= rest * cls.log_complement(i);
  return s;
}

double exact_score(const ModelClass& cls, std::size_t i, const ObservationSummary& obs, bool use_kw) {
  const double penalty = use_kw ? cls.kw(i) * std::numbers::ln2 : 0.0;
  if (obs.n == 0) return penalty;
  return static_cast<double>(obs.n) * kl(obs.alpha(), cls.value(i)) + penalty;
}

std::size_t select(const ModelClass& cls, const ObservationSummary& obs, bool use_kw) {
  check_obs(obs);
  const std::size_t m = cls.size();

  std::vector<double> rough(m);
  double best_rough = kInf;
  for (std::size_t i = 0; i < m; ++i) {
    rough[i] = rough_score(cls, i, obs, use_kw);
    best_rough = std::min(best_rough, rough[i]);
  }
  if (best_rough == kInf) throw std::domain_error("every member has infinite score at this observation");

  // The rough scores differ from the true ones by a shared constant plus
  // rounding far below this margin.
  const double margin = 1e-7 * (1.0 + std::abs(best_rough));
  std::vector<std::pair<std::size_t, double>> shortlist;
  double best = kInf;
  for (std::size_t i = 0; i < m; ++i) {
    if (rough[i] > best_rough + margin) continue;
    const double s = exact_score(cls, i, obs, use_kw);
    shortlist.emplace_back(i, s);
    best = std::min(best, s);
  }

  std::size_t chosen = m;
  for (const auto& [i, s] : shortlist) {
    if (s > best + kScoreTieTolerance) continue;
    if (chosen == m || (use_kw && cls.kw(i) < cls.kw(chosen))) chosen = i;
  }
  return chosen;
}

}  // namespace

Rule parse_rule(std::string_view name) {
  if (name == "mdl") return Rule::mdl;
  if (name == "ml") return Rule::ml;
  if (name == "bayes") return Rule::bayes;
  throw std::invalid_argument("unknown rule '" + std::string(name) + "' (expected mdl, ml or bayes)");
}

std::string_view rule_name(Rule rule) {
  switch (rule) {
    case Rule::mdl:
      return "mdl";
    case Rule::ml:
      return "ml";
    case Rule::bayes:
      return "bayes";
  }
  return "?";
}

double mdl_score(const ModelClass& cls, std::size_t i, const ObservationSummary& obs) {
  check_obs(obs);
  return exact_score(cls, i, obs, true);
}

std::size_t mdl_select(const ModelClass& cls, const ObservationSummary& obs) { return select(cls, obs, true); }

std::size_t ml_select(const ModelClass& cls, const ObservationSummary& obs) { return select(cls, obs, false); }

bool beats(const ModelClass& cls, std::size_t i, std::size_t j, const ObservationSummary& obs) {
  check_obs(obs);
  const double lhs = obs.n == 0 ? 0.0 : static_cast<double>(obs.n) * extended_kl(obs.alpha(), cls.value(i), cls.value(j));
  if (obs.n == 0 && (!cls.interior(i) || !cls.interior(j))) {
    throw std::domain_error("beats needs interior parameters");
  }
  return lhs >= std::numbers::ln2 * (cls.kw(i) - cls.kw(j)) - kScoreTieTolerance;
}

double bayes_predictive(const ModelClass& cls, const ObservationSummary& obs) {
  check_obs(obs);
  const std::size_t m = cls.size();
  std::vector<double> log_joint(m);
  double top = -kInf;
  for (std::size_t i = 0; i < m; ++i) {
    log_joint[i] = -cls.kw(i) * std::numbers::ln2 - rough_score(cls, i, obs, false);
    top = std::max(top, log_joint[i]);
  }
  if (top == -kInf) throw std::domain_error("mixture has zero mass at this observation");

  double mass = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = std::exp(log_joint[i] - top);
    mass += w;
    mean += w * cls.value(i);
  }
  return std::clamp(mean / mass, cls.value(0), cls.value(m - 1));
}

DecisionMap::DecisionMap(const ModelClass& cls, std::uint64_t n, bool ignore_complexity) : n_(n) {
  if (n == 0) throw std::invalid_argument("decision map needs n >= 1");
  const bool use_kw = !ignore_complexity;
  const double dn = static_cast<double>(n);

  // Per-member score / n, minus the entropy of alpha, is c + alpha * s.
  struct Line {
    double c;
    double s;
    std::size_t member;
  };
  std::vector<Line> hull;
  auto redundant = [](const Line& l1, const Line& l2, const Line& l3) {
    return (l3.c - l1.c) * (l1.s - l2.s) <= (l2.c - l1.c) * (l1.s - l3.s);
  };

  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (!cls.interior(i)) continue;
    const Line line{-cls.log_complement(i) + (use_kw ? cls.kw(i) * std::numbers::ln2 / dn : 0.0),
                    cls.log_complement(i) - cls.log_value(i), i};
    if (!hull.empty() && hull.back().s == line.s) {
      const Line& top = hull.back();
      const bool better = line.c < top.c || (line.c == top.c && use_kw && cls.kw(i) < cls.kw(top.member));
      if (!better) continue;
      hull.pop_back();
    }
    while (hull.size() >= 2 && redundant(hull[hull.size() - 2], hull.back(), line)) hull.pop_back();
    hull.push_back(line);
  }
  if (hull.empty()) throw std::invalid_argument("decision map needs at least one interior member");

  std::vector<double> xs;
  for (std::size_t j = 1; j < hull.size(); ++j) {
    xs.push_back((hull[j].c - hull[j - 1].c) / (hull[j - 1].s - hull[j].s));
  }
  std::size_t first = 0;
  while (first < xs.size() && xs[first] <= 0.0) ++first;
  std::size_t last = xs.size();
  while (last > first && xs[last - 1] >= 1.0) --last;

  for (std::size_t j = first; j < last; ++j) breakpoints_.push_back(xs[j]);
  for (std::size_t j = first; j <= last; ++j) selected_.push_back(hull[j].member);

  auto exact = [&](std::uint64_t k) {
    const ObservationSummary obs{n, k};
    return use_kw ? mdl_select(cls, obs) : ml_select(cls, obs);
  };
  std::vector<std::uint64_t> suspects{0, n};
  for (std::size_t j = 0; j < breakpoints_.size(); ++j) {
    const double slope_gap = std::abs(cls.log_value(selected_[j + 1]) - cls.log_value(selected_[j]) +
                                      cls.log_complement(selected_[j]) - cls.log_complement(selected_[j + 1]));
    const double reach = std::max(1e-9, 2.0 * kScoreTieTolerance / (dn * slope_gap));
    const double lo = std::max(0.0, std::ceil((breakpoints_[j] - reach) * dn));
    const double hi = std::min(dn, std::floor((breakpoints_[j] + reach) * dn));
    for (double k = lo; k <= hi; k += 1.0) suspects.push_back(static_cast<std::uint64_t>(k));
  }
  std::sort(suspects.begin(), suspects.end());
  suspects.erase(std::unique(suspects.begin(), suspects.end()), suspects.end());
  for (std::uint64_t k : suspects) {
    const std::size_t m = exact(k);
    if (m != segment_member(k)) overrides_.emplace_back(k, m);
  }
}

std::size_t DecisionMap::segment_member(std::uint64_t k) const {
  const double alpha = static_cast<double>(k) / static_cast<double>(n_);
  const auto seg = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), alpha) - breakpoints_.begin();
  return selected_[static_cast<std::size_t>(seg)];
}

std::size_t DecisionMap::lookup(std::uint64_t k) const {
  if (k > n_) throw std::invalid_argument("lookup k=" + std::to_string(k) + " beyond n=" + std::to_string(n_));
  const auto it = std::lower_bound(overrides_.begin(), overrides_.end(), k,
                                   [](const auto& o, std::uint64_t v) { return o.first < v; });
  if (it != overrides_.end() && it->first == k) return it->second;
  return segment_member(k);
}

std::vector<DecisionRegion> DecisionMap::regions() const {
  const double dn = static_cast<double>(n_);
  // First k of each segment, consistent with segment_member's division.
  std::vector<std::uint64_t> starts{0};
  for (double x : breakpoints_) {
    double k = std::clamp(std::ceil(x * dn), 0.0, dn + 1.0);
    while (k > 0.0 && (k - 1.0) / dn >= x) k -= 1.0;
    while (k <= dn && k / dn < x) k += 1.0;
    starts.push_back(static_cast<std::uint64_t>(k));
  }
  starts.push_back(n_ + 1);

  std::vector<DecisionRegion> out;
  auto emit = [&out](std::uint64_t lo, std::uint64_t hi, std::size_t member) {
    if (lo > hi) return;
    if (!out.empty() && out.back().member == member && out.back().k_hi + 1 == lo) {
      out.back().k_hi = hi;
    } else {
      out.push_back({lo, hi, member});
    }
  };

  auto ov = overrides_.begin();
  for (std::size_t j = 0; j < selected_.size(); ++j) {
    if (starts[j + 1] <= starts[j]) continue;
    std::uint64_t lo = starts[j];
    const std::uint64_t hi = starts[j + 1] - 1;
    for (; ov != overrides_.end() && ov->first <= hi; ++ov) {
      if (ov->first < lo) continue;
      if (ov->first > lo) emit(lo, ov->first - 1, selected_[j]);
      emit(ov->first, ov->first, ov->second);
      lo = ov->first + 1;
    }
    if (lo <= hi) emit(lo, hi, selected_[j]);
  }
  return out;
}

DecisionMap decision_map(const ModelClass& cls, std::uint64_t n) { return DecisionMap(cls, n); }

}  // namespace mdl
