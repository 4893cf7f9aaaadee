#pragma once

#include <cstdint>

namespace dlab::rng {

// Splittable counter-based generation: every draw is a pure function of
// (seed, counter), so ensembles are reproducible under any execution order.

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer (Steele/Lea/Flood; Vigna's fixed-increment variant).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed of the stream owned by child `index` (e.g. one path of an ensemble).
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master + (index + 1) * kGoldenGamma);
}

inline std::uint64_t bits(std::uint64_t seed, std::uint64_t counter) {
  return mix64(seed + (counter + 1) * kGoldenGamma);
}

/// Uniform draw strictly inside (0,1).
inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
  return (static_cast<double>(bits(seed, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Inverse of the standard normal CDF (Wichura's PPND16, AS 241).
/// Absolute error below 1e-15 over the full open interval.
double inverse_normal_cdf(double p);

/// Standard normal draw at (seed, counter).
inline double normal(std::uint64_t seed, std::uint64_t counter) {
  return inverse_normal_cdf(uniform01(seed, counter));
}

}  // namespace dlab::rng
