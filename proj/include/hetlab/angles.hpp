#pragma once

#include <cmath>
#include <numbers>

namespace hetlab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Canonical reduction of an angle to [0, 2pi). Every angular output in the
/// library goes through this function.
inline double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number can round back up to exactly 2pi.
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

/// Distance on R / 2piZ, in [0, pi].
inline double circle_distance(double x, double y) {
  const double d = wrap_angle(x - y);
  return d > kPi ? kTwoPi - d : d;
}

}  // namespace hetlab
