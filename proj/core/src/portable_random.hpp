#pragma once

// Distribution helpers with a fixed algorithm, so generated datasets do not
// depend on the standard library implementation.

#include <cmath>
#include <numbers>
#include <random>

namespace ttpdf::detail {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(std::mt19937_64& rng) {
  double u1;
  do u1 = uniform01(rng);
  while (u1 == 0.0);
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ttpdf::detail
