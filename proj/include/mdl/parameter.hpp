#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace mdl {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// 2^-exponent as an exact rational.
Rational dyadic_unit(unsigned exponent);

/// Converts an exact rational to the nearest double.
double to_double(const Rational& r);

/// Exact Bernoulli parameter in [0, 1], stored in lowest terms.
///
/// Accepted text forms: "p/q", an integer "0" or "1", and a binary fraction
/// "0.0011b" (trailing 'b' marks base 2).
class Parameter {
 public:
  Parameter() = default;
  explicit Parameter(Rational value);
  Parameter(std::int64_t numerator, std::int64_t denominator);

  static Parameter parse(std::string_view text);
  /// numerator / 2^exponent
  static Parameter dyadic(const BigInt& numerator, unsigned exponent);

  const Rational& value() const { return value_; }
  BigInt numerator() const;
  BigInt denominator() const;
  double to_double() const { return approx_; }

  bool is_zero() const { return value_ == 0; }
  bool is_one() const { return value_ == 1; }
  bool is_interior() const { return !is_zero() && !is_one(); }
  bool is_dyadic() const;

  /// Position of the last 1-bit of the binary expansion 0.b1...b(l-1)1.
  /// Empty for 0, 1 and non-dyadic values.
  std::optional<unsigned> binary_length() const;

  /// "p/q" (or "0" / "1").
  std::string to_string() const;
  /// "0.0011b"; throws for non-dyadic values.
  std::string to_binary() const;

  Parameter complement() const { return Parameter(Rational(1) - value_); }

  friend bool operator==(const Parameter& a, const Parameter& b) { return a.value_ == b.value_; }
  friend std::strong_ordering operator<=>(const Parameter& a, const Parameter& b) {
    if (a.value_ < b.value_) return std::strong_ordering::less;
    if (b.value_ < a.value_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  Rational value_{0};
  double approx_ = 0.0;
};

}  // namespace mdl
