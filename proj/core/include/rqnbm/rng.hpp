#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rqnbm {

/// Deterministic random stream used everywhere a seed appears.
///
/// Engine: std::mt19937_64 (64-bit Mersenne Twister), whose output sequence
/// is pinned by the C++ standard, seeded directly with the given value.
/// Distributions are implemented explicitly here instead of through
/// std::uniform_real_distribution / std::normal_distribution, whose mappings
/// are implementation-defined; this keeps streams bit-identical across
/// standard libraries and platforms.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform on [0, 1): top 53 bits of one engine draw, scaled by 2^-53.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via the Box-Muller transform on two uniform draws.
  /// No caching of the second value: each call consumes exactly two engine
  /// draws, which keeps the stream position easy to reason about.
  double gauss() {
    const double u1 = 1.0 - uniform01();  // (0, 1]; keeps log() finite
    const double u2 = uniform01();
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

private:
  std::mt19937_64 eng_;
};

}  // namespace rqnbm
