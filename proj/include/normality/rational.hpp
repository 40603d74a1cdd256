#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace normality {

using BigInt = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;

inline Rational pow2(long exponent) {
  BigInt p = 1;
  p <<= static_cast<unsigned>(exponent < 0 ? -exponent : exponent);
  return exponent < 0 ? Rational(BigInt(1), p) : Rational(p);
}

inline BigInt binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt r = 1;
  for (unsigned i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

inline BigInt factorial(unsigned n) {
  BigInt r = 1;
  for (unsigned i = 2; i <= n; ++i) r *= i;
  return r;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline std::string to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

/// Parses `a/b`, integers, and decimals (`.9999999`, `0.25`) exactly.
/// Returns nullopt on malformed input; never throws.
inline std::optional<Rational> parse_rational(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  if (text.front() == '-' || text.front() == '+') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.empty()) return std::nullopt;

  auto parse_digits = [](std::string_view digits) -> std::optional<BigInt> {
    if (digits.empty() || digits.size() > 4096) return std::nullopt;
    BigInt v = 0;
    for (char c : digits) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + (c - '0');
    }
    return v;
  };

  Rational value;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num = parse_digits(text.substr(0, slash));
    auto den = parse_digits(text.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    value = Rational(*num, *den);
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    auto whole = text.substr(0, dot);
    auto frac = text.substr(dot + 1);
    if (whole.empty() && frac.empty()) return std::nullopt;
    BigInt w = 0;
    if (!whole.empty()) {
      auto parsed = parse_digits(whole);
      if (!parsed) return std::nullopt;
      w = *parsed;
    }
    BigInt f = 0;
    BigInt scale = 1;
    if (!frac.empty()) {
      auto parsed = parse_digits(frac);
      if (!parsed) return std::nullopt;
      f = *parsed;
      for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    }
    value = Rational(w) + Rational(f, scale);
  } else {
    auto parsed = parse_digits(text);
    if (!parsed) return std::nullopt;
    value = Rational(*parsed);
  }
  return negative ? Rational(-value) : value;
}

}  // namespace normality
