#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace coremech {

// Quantities are MW, money is $; everything runs in 64-bit floating point.
// Comparisons use an absolute tolerance scaled by max(1, magnitude).
inline constexpr double kTol = 1e-9;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline double scaled_tol(double magnitude, double tol = kTol) {
  return tol * std::max(1.0, std::abs(magnitude));
}

inline bool near(double a, double b, double tol = kTol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline bool near_zero(double a, double tol = kTol) { return std::abs(a) <= tol; }

inline bool is_finite(double a) { return std::isfinite(a); }

}  // namespace coremech
