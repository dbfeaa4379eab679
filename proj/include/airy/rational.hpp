#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace airy {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_mismatch_error : error {
  using error::error;
};

struct window_overflow_error : error {
  using error::error;
};

struct closedness_error : error {
  using error::error;
};

inline Integer factorial(long n) {
  Integer r = 1;
  for (long i = 2; i <= n; ++i) r *= i;
  return r;
}

inline Integer binomial(long n, long k) {
  if (k < 0 || k > n) return 0;
  Integer r = 1;
  for (long i = 0; i < k; ++i) {
    r *= (n - i);
    r /= (i + 1);
  }
  return r;
}

// Generalized binomial coefficient C(e, k) for rational e.
inline Rational binomial(const Rational& e, long k) {
  if (k < 0) return 0;
  Rational r = 1;
  for (long i = 0; i < k; ++i) {
    r *= (e - i);
    r /= (i + 1);
  }
  return r;
}

// Lowest terms, positive denominator: "p/q", or just "p" when q == 1.
inline std::string rational_to_string(const Rational& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) {
    s += "/";
    s += denominator(r).str();
  }
  return s;
}

inline Rational rational_from_string(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(Integer(s));
    Integer p(s.substr(0, slash));
    Integer q(s.substr(slash + 1));
    if (q == 0) throw error("zero denominator in rational literal: " + s);
    return Rational(p, q);
  } catch (const std::exception&) {
    throw error("malformed rational literal: " + s);
  }
}

}  // namespace airy
