#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace boxte {

// Bounded draw from a mt19937_64 stream. Uses plain modulo: the bias is
// negligible for the small ranges we draw (vocabulary sizes), and unlike
// std::uniform_int_distribution the output is identical on every platform,
// which the reproducibility guarantees depend on.
inline std::uint64_t rand_below(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;
}

// Uniform double in [lo, hi). Same portability rationale as rand_below.
inline double rand_uniform(std::mt19937_64& rng, double lo, double hi) {
  const double unit = (rng() >> 11) * 0x1.0p-53;  // 53 random bits in [0,1)
  return lo + unit * (hi - lo);
}

template <typename T>
void shuffle_deterministic(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rand_below(rng, i)]);
  }
}

}  // namespace boxte
