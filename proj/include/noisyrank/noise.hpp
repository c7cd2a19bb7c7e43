#pragma once

// Class-conditional label noise with equal flip rates for both classes:
// noisy = eps * y + (1 - eps) * (1 - y) with eps ~ Bernoulli(gamma) drawn
// independently per label. Features are never read.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "noisyrank/data.hpp"

namespace noisyrank {

class NoiseSpec {
 public:
  /// gamma is the probability of keeping a label. Throws InputError outside [0, 1].
  NoiseSpec(double gamma, std::uint64_t seed);

  double gamma() const noexcept { return gamma_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  double gamma_;
  std::uint64_t seed_;
};

struct Corruption {
  std::vector<int> noisy;
  std::vector<bool> flips;
};

/// Corrupts one label vector using the stream seeded by spec.seed().
/// Throws InputError on a non-binary label.
Corruption corrupt_labels(std::span<const int> labels, const NoiseSpec& spec);

/// Same as above on the stream derived from (spec.seed(), stream_key).
Corruption corrupt_labels(std::span<const int> labels, const NoiseSpec& spec,
                          std::string_view stream_key);

struct CorruptedDataset {
  Dataset noisy;
  std::size_t flipped = 0;
};

/// Corrupts every query with its own stream keyed by query_id, so the result
/// does not depend on query order. One gamma applies to every query.
CorruptedDataset corrupt_dataset(const Dataset& ds, const NoiseSpec& spec);

}  // namespace noisyrank
