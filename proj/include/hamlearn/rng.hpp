#pragma once

#include <cstdint>
#include <random>
#include <vector>

// Randomness contract: every stochastic component draws from its own
// std::mt19937_64 whose seed is derived from one master seed through
// SplitMix64 mixing. mt19937_64 output and the mantissa mapping below are
// fully specified, so identical seeds give bit-identical streams.

namespace hamlearn {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of substream `stream` of `master`. Chain calls to derive nested
// substreams, e.g. substream_seed(substream_seed(master, size_idx), atom).
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream));
}

// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform_unit(Rng& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Rng& g, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(g);
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_below(Rng& g, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

// Fisher-Yates shuffle with the project RNG (std::shuffle is not
// reproducible across standard libraries).
template <typename T>
void shuffle(std::vector<T>& v, Rng& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_below(g, i)]);
  }
}

}  // namespace hamlearn
