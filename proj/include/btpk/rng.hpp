#pragma once

// Platform-stable random helpers. std::mt19937_64 has a standardized output
// sequence, but the std distributions and std::shuffle do not, so byte-stable
// artifacts need the conversions below.

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace btpk {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, bound) by rejection (no modulo bias).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

/// Fisher-Yates, walking from the back.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_below(rng, i);
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace btpk
