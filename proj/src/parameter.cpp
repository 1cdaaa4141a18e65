#include "mdl/parameter.hpp"

#include <cctype>
#include <stdexcept>

namespace mdl {

namespace {

BigInt parse_unsigned(std::string_view digits, std::string_view original) {
  if (digits.empty()) throw std::invalid_argument("empty number in parameter '" + std::string(original) + "'");
  BigInt value = 0;
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw std::invalid_argument("bad digit in parameter '" + std::string(original) + "'");
    }
    value = value * 10 + (c - '0');
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Rational dyadic_unit(unsigned exponent) {
  BigInt den = 1;
  den <<= exponent;
  return Rational(BigInt(1), den);
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

Parameter::Parameter(Rational value) : value_(std::move(value)) {
  if (value_ < 0 || value_ > 1) {
    throw std::invalid_argument("parameter " + value_.str() + " outside [0,1]");
  }
  approx_ = mdl::to_double(value_);
}

Parameter::Parameter(std::int64_t numerator, std::int64_t denominator)
    : Parameter([&] {
        if (denominator <= 0) throw std::invalid_argument("parameter denominator must be positive");
        return Rational(BigInt(numerator), BigInt(denominator));
      }()) {}

Parameter Parameter::dyadic(const BigInt& numerator, unsigned exponent) {
  BigInt den = 1;
  den <<= exponent;
  return Parameter(Rational(numerator, den));
}

Parameter Parameter::parse(std::string_view text) {
  const std::string_view s = trim(text);
  if (s.empty()) throw std::invalid_argument("empty parameter string");

  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    const BigInt num = parse_unsigned(trim(s.substr(0, slash)), s);
    const BigInt den = parse_unsigned(trim(s.substr(slash + 1)), s);
    if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(s) + "'");
    return Parameter(Rational(num, den));
  }

  const bool binary = s.back() == 'b';
  const std::string_view body = binary ? s.substr(0, s.size() - 1) : s;
  const auto dot = body.find('.');
  const std::string_view whole = body.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);

  if (binary) {
    if (whole != "0" && whole != "1") {
      throw std::invalid_argument("binary parameter must start with 0. or 1.: '" + std::string(s) + "'");
    }
    BigInt num = whole == "1" ? 1 : 0;
    for (char c : frac) {
      if (c != '0' && c != '1') throw std::invalid_argument("bad binary digit in '" + std::string(s) + "'");
      num = num * 2 + (c - '0');
    }
    return dyadic(num, static_cast<unsigned>(frac.size()));
  }

  BigInt num = parse_unsigned(whole, s);
  BigInt den = 1;
  for (char c : frac) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw std::invalid_argument("bad digit in parameter '" + std::string(s) + "'");
    }
    num = num * 10 + (c - '0');
    den *= 10;
  }
  return Parameter(Rational(num, den));
}

BigInt Parameter::numerator() const { return boost::multiprecision::numerator(value_); }
BigInt Parameter::denominator() const { return boost::multiprecision::denominator(value_); }

bool Parameter::is_dyadic() const {
  const BigInt den = denominator();
  return (den & (den - 1)) == 0;
}

std::optional<unsigned> Parameter::binary_length() const {
  if (!is_interior() || !is_dyadic()) return std::nullopt;
  // In lowest terms the numerator is odd, so the last 1-bit sits at log2(den).
  return static_cast<unsigned>(boost::multiprecision::msb(denominator()));
}

std::string Parameter::to_string() const {
  if (is_zero()) return "0";
  if (is_one()) return "1";
  return numerator().str() + "/" + denominator().str();
}

std::string Parameter::to_binary() const {
  if (is_zero()) return "0b";
  if (is_one()) return "1b";
  const auto len = binary_length();
  if (!len) throw std::invalid_argument("parameter " + to_string() + " is not dyadic");
  const BigInt num = numerator();
  std::string out = "0.";
  out.reserve(*len + 3);
  for (unsigned i = *len; i-- > 0;) out.push_back(boost::multiprecision::bit_test(num, i) ? '1' : '0');
  out.push_back('b');
  return out;
}

}  // namespace mdl
