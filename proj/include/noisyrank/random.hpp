#pragma once

// Reproducible random streams.
//
// Sequential streams use std::mt19937_64, whose output sequence is fixed by
// the standard. The standard <random> distributions are not (their algorithms
// are implementation-defined), so the distributions below are written out
// explicitly. Independent streams are derived from a root seed with the
// SplitMix64 finalizer, keyed by an integer or a string (e.g. a query id), so
// per-query results never depend on iteration order.
//
// For values that must be a pure function of a key (e.g. the perturbation a
// simulated scorer adds to one document) use the counter-based helpers
// hash_uniform/hash_normal instead of constructing a stream.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace noisyrank {

/// SplitMix64 finalizer: a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a of a string.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) noexcept {
  return derive_seed(seed, fnv1a64(key));
}

/// Maps 64 random bits to a double in [0, 1) using the top 53 bits.
constexpr double bits_to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Uniform [0, 1) as a pure function of the key.
constexpr double hash_uniform(std::uint64_t key) noexcept { return bits_to_unit(mix64(key)); }

/// Standard normal as a pure function of the key (Box-Muller on two hashed uniforms).
double hash_normal(std::uint64_t key) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return bits_to_unit(engine_()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes two draws, no cached spare.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n), unbiased (rejection on the top range).
  std::size_t below(std::size_t n);

  /// Fisher-Yates shuffle with a fixed draw order.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace noisyrank
