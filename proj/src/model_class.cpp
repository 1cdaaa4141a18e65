#include "mdl/model_class.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace mdl {

namespace {

constexpr unsigned kMaxCounterexampleBits = 12;
constexpr unsigned kMaxGridPrecision = 20;

std::string format_kw(double kw) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", kw);
  return buf;
}

std::vector<CodedParameter> counterexample_members(unsigned n_bits, std::uint64_t k_last) {
  std::vector<CodedParameter> members;
  members.reserve(k_last + 1);
  const double kw = static_cast<double>(n_bits);
  members.emplace_back(Parameter(1, 2), kw);
  for (std::uint64_t k = 1; k <= k_last; ++k) {
    members.emplace_back(Parameter(Rational(1, 2) + dyadic_unit(static_cast<unsigned>(k + 1))), kw);
  }
  return members;
}

void check_counterexample_bits(unsigned n_bits) {
  if (n_bits < 1 || n_bits > kMaxCounterexampleBits) {
    throw std::invalid_argument("counterexample class needs 1 <= N <= " + std::to_string(kMaxCounterexampleBits) +
                                ", got " + std::to_string(n_bits));
  }
}

void check_grid_precision(unsigned precision) {
  if (precision < 1 || precision > kMaxGridPrecision) {
    throw std::invalid_argument("grid precision must be in 1.." + std::to_string(kMaxGridPrecision) + ", got " +
                                std::to_string(precision));
  }
}

}  // namespace

CodedParameter::CodedParameter(Parameter p, double kw) : param(std::move(p)), complexity_kw(kw) {
  if (!(kw >= 0.0) || std::isinf(kw)) {
    throw std::invalid_argument("complexity of " + param.to_string() + " must be finite and >= 0");
  }
  weight = std::exp2(-kw);
}

ModelClass::ModelClass(std::vector<CodedParameter> members, std::optional<Parameter> truth)
    : members_(std::move(members)) {
  if (members_.empty()) throw std::invalid_argument("model class needs at least one member");
  std::sort(members_.begin(), members_.end(),
            [](const CodedParameter& a, const CodedParameter& b) { return a.param < b.param; });
  for (std::size_t i = 1; i < members_.size(); ++i) {
    if (members_[i].param == members_[i - 1].param) {
      throw std::invalid_argument("duplicate parameter " + members_[i].param.to_string());
    }
  }

  value_.reserve(members_.size());
  log_value_.reserve(members_.size());
  log_complement_.reserve(members_.size());
  interior_.reserve(members_.size());
  min_kw_ = std::numeric_limits<double>::infinity();
  for (const auto& m : members_) {
    const double v = m.param.to_double();
    value_.push_back(v);
    log_value_.push_back(m.param.is_zero() ? -std::numeric_limits<double>::infinity() : std::log(v));
    // 1 - v is exact in double only up to rounding; take it from the rational.
    const double c = m.param.complement().to_double();
    log_complement_.push_back(m.param.is_one() ? -std::numeric_limits<double>::infinity() : std::log(c));
    interior_.push_back(m.param.is_interior() ? 1 : 0);
    kraft_sum_ += m.weight;
    min_kw_ = std::min(min_kw_, m.complexity_kw);
  }

  if (truth) {
    true_index_ = find(*truth);
    if (!true_index_) throw std::invalid_argument("true parameter " + truth->to_string() + " is not a class member");
  }
}

std::size_t ModelClass::require_true_index() const {
  if (!true_index_) throw std::logic_error("model class has no designated true parameter");
  return *true_index_;
}

ModelClass ModelClass::with_truth(const Parameter& truth) const {
  return ModelClass(members_, truth);
}

std::size_t ModelClass::lower_bound(const Parameter& p) const {
  return static_cast<std::size_t>(
      std::lower_bound(members_.begin(), members_.end(), p,
                       [](const CodedParameter& m, const Parameter& v) { return m.param < v; }) -
      members_.begin());
}

std::size_t ModelClass::upper_bound(const Parameter& p) const {
  return static_cast<std::size_t>(
      std::upper_bound(members_.begin(), members_.end(), p,
                       [](const Parameter& v, const CodedParameter& m) { return v < m.param; }) -
      members_.begin());
}

std::optional<std::size_t> ModelClass::find(const Parameter& p) const {
  const std::size_t i = lower_bound(p);
  if (i < members_.size() && members_[i].param == p) return i;
  return std::nullopt;
}

double ModelClass::squared_distance(std::size_t i, std::size_t j) const {
  const double d = to_double(members_[i].param.value() - members_[j].param.value());
  return d * d;
}

unsigned ModelClass::resolution_bits() const {
  if (members_.size() < 2) return 0;
  Rational gap = members_[1].param.value() - members_[0].param.value();
  for (std::size_t i = 2; i < members_.size(); ++i) {
    gap = std::min(gap, Rational(members_[i].param.value() - members_[i - 1].param.value()));
  }
  const Rational inv = 1 / gap;
  const BigInt whole = boost::multiprecision::numerator(inv) / boost::multiprecision::denominator(inv);
  return whole == 0 ? 0 : static_cast<unsigned>(boost::multiprecision::msb(whole));
}

std::string ModelClass::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& m : members_) feed(m.param.to_string() + ":" + format_kw(m.complexity_kw) + ";");
  if (true_index_) feed("true=" + members_[*true_index_].param.to_string());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double dyadic_complexity(const Parameter& theta) {
  if (theta.is_zero() || theta.is_one()) return 2.0;
  const auto len = theta.binary_length();
  if (!len) throw std::invalid_argument("dyadic_complexity: " + theta.to_string() + " is not a binary fraction");
  const unsigned l = *len;
  return static_cast<double>(l + 2 * std::bit_width(l + 1) - 2);
}

ModelClass counterexample_class(unsigned n_bits) {
  check_counterexample_bits(n_bits);
  const std::uint64_t k_last = (std::uint64_t{1} << n_bits) - 1;
  return ModelClass(counterexample_members(n_bits, k_last), Parameter(1, 2));
}

ModelClass extended_counterexample_class(unsigned n_bits, const std::vector<std::pair<Parameter, double>>& extras) {
  check_counterexample_bits(n_bits);
  const std::uint64_t k_last = (std::uint64_t{1} << n_bits) - 2;
  auto members = counterexample_members(n_bits, k_last);
  for (const auto& [param, kw] : extras) {
    if (!(kw > static_cast<double>(n_bits))) {
      throw std::invalid_argument("extra parameter " + param.to_string() + " needs complexity > " +
                                  std::to_string(n_bits));
    }
    members.emplace_back(param, kw);
  }
  return ModelClass(std::move(members), Parameter(1, 2));
}

ModelClass dyadic_grid_class(unsigned precision) {
  check_grid_precision(precision);
  const std::uint64_t count = std::uint64_t{1} << precision;
  std::vector<CodedParameter> members;
  members.reserve(count + 1);
  for (std::uint64_t j = 0; j <= count; ++j) {
    Parameter p = Parameter::dyadic(BigInt(j), precision);
    const double kw = dyadic_complexity(p);
    members.emplace_back(std::move(p), kw);
  }
  return ModelClass(std::move(members));
}

ModelClass distorted_class(const std::vector<Rational>& poly_coeffs, unsigned precision) {
  check_grid_precision(precision);
  if (poly_coeffs.empty()) throw std::invalid_argument("distortion polynomial has no coefficients");
  const std::uint64_t count = std::uint64_t{1} << precision;
  std::vector<CodedParameter> members;
  members.reserve(count + 1);
  for (std::uint64_t j = 0; j <= count; ++j) {
    const Parameter t = Parameter::dyadic(BigInt(j), precision);
    Rational phi = 0;
    for (auto it = poly_coeffs.rbegin(); it != poly_coeffs.rend(); ++it) phi = phi * t.value() + *it;
    if (phi < 0 || phi > 1) {
      throw std::invalid_argument("distortion maps t=" + t.to_string() + " to " + phi.str() + ", outside [0,1]");
    }
    members.emplace_back(Parameter(phi), dyadic_complexity(t));
  }
  std::vector<CodedParameter> sorted = members;
  std::sort(sorted.begin(), sorted.end(),
            [](const CodedParameter& a, const CodedParameter& b) { return a.param < b.param; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].param == sorted[i - 1].param) {
      throw std::invalid_argument("distortion is not injective on the grid: value " + sorted[i].param.to_string() +
                                  " repeats");
    }
  }
  return ModelClass(std::move(members));
}

KraftCheck validate_kraft(const ModelClass& cls) {
  return {cls.kraft_sum(), cls.kraft_sum() <= 1.0 + 1e-12};
}

}  // namespace mdl
