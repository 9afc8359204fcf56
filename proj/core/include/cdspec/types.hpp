#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace cdspec {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Extended exponent: p in (0, inf]. Infinity is std::numeric_limits infinity.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_inf(double p) { return p == kInf; }

}  // namespace cdspec
