#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>

namespace niid {

// Arbitrary-precision rational scalar for the code paths where floor
// computations and averaging identities must hold exactly.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& x) { return x.convert_to<double>(); }
inline double to_double(double x) { return x; }

// floor(x) for x >= 0.
inline BigInt rational_floor(const Rational& x) {
  return numerator(x) / denominator(x);
}

inline Rational make_scalar_ratio(std::int64_t num, std::int64_t den,
                                  Rational /*tag*/) {
  return Rational(num, den);
}
inline double make_scalar_ratio(std::int64_t num, std::int64_t den,
                                double /*tag*/) {
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace niid
