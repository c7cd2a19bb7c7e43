#include "noisyrank/noise.hpp"

#include <string>

#include "noisyrank/error.hpp"
#include "noisyrank/random.hpp"

namespace noisyrank {

namespace {

Corruption corrupt_with(std::span<const int> labels, double gamma, Rng& rng) {
  Corruption out;
  out.noisy.reserve(labels.size());
  out.flips.reserve(labels.size());
  for (int y : labels) {
    if (y != 0 && y != 1) throw InputError("cannot corrupt non-binary label " + std::to_string(y));
    const bool keep = rng.bernoulli(gamma);
    out.noisy.push_back(keep ? y : 1 - y);
    out.flips.push_back(!keep);
  }
  return out;
}

}  // namespace

NoiseSpec::NoiseSpec(double gamma, std::uint64_t seed) : gamma_(gamma), seed_(seed) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw InputError("gamma must lie in [0, 1], got " + std::to_string(gamma));
  }
}

Corruption corrupt_labels(std::span<const int> labels, const NoiseSpec& spec) {
  Rng rng(spec.seed());
  return corrupt_with(labels, spec.gamma(), rng);
}

Corruption corrupt_labels(std::span<const int> labels, const NoiseSpec& spec,
                          std::string_view stream_key) {
  Rng rng(derive_seed(spec.seed(), stream_key));
  return corrupt_with(labels, spec.gamma(), rng);
}

CorruptedDataset corrupt_dataset(const Dataset& ds, const NoiseSpec& spec) {
  CorruptedDataset out{ds, 0};
  for (auto& q : out.noisy.queries) {
    const auto labels = q.labels();
    const auto c = corrupt_labels(labels, spec, q.query_id);
    for (std::size_t i = 0; i < q.documents.size(); ++i) {
      q.documents[i].label = c.noisy[i];
      out.flipped += c.flips[i] ? 1 : 0;
    }
  }
  return out;
}

}  // namespace noisyrank
