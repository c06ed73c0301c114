#pragma once

// Portable seeded randomness. The standard distributions are
// implementation-defined, so everything that feeds a reproducible output goes
// through these helpers on top of std::mt19937_64 (whose sequence is fixed by
// the standard).

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace tactile::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Combine a seed with a stream index into an independent child seed.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, bound) by rejection.
inline std::uint64_t below(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v;
  do {
    v = gen();
  } while (v >= limit);
  return v % bound;
}

/// Standard normal via Box-Muller (one value per call; the pair's sine half is dropped).
inline double normal(std::mt19937_64& gen) {
  double u1;
  do {
    u1 = uniform01(gen);
  } while (u1 <= 0.0);
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <typename T>
void shuffle(std::span<T> items, std::mt19937_64& gen) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(below(gen, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace tactile::rng
