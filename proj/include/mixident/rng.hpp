#pragma once

#include <cstdint>
#include <random>

#include "mixident/subset.hpp"

namespace mixident {

// Uniform double in [0,1) from the top 53 bits of a 64-bit draw.  We avoid
// std::uniform_real_distribution so that a given seed produces the same
// stream on every standard library.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

// Uniform integer in [0, bound) by rejection, bias-free.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void shuffle_inplace(std::mt19937_64& gen, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(gen, i));
    std::swap(v[i - 1], v[j]);
  }
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stateless hash of (seed, S) to a double in [0,1).  Used for perturbations
// that must be a pure function of the queried subset.
inline double subset_hash01(std::uint64_t seed, const Subset& s) {
  std::uint64_t h = splitmix64(seed ^ 0x5bf03635e22ae3c7ull);
  for (int bit : s) h = splitmix64(h ^ (static_cast<std::uint64_t>(bit) + 0x9e3779b9ull));
  h = splitmix64(h ^ static_cast<std::uint64_t>(s.size()));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace mixident
