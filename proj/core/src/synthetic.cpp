#include "ccp/synthetic.hpp"

#include "ccp/errors.hpp"
#include "ccp/prng.hpp"

namespace ccp {

Dataset generate_dominant_channel(int per_class, int side, std::uint64_t seed) {
  if (side <= 0) throw DataError("synthetic image size must be positive");
  if (per_class < 0) throw DataError("synthetic per-class count must be non-negative");

  Dataset ds;
  ds.num_classes = kSyntheticClasses;
  const std::size_t n = static_cast<std::size_t>(per_class) * kSyntheticClasses;
  ds.images.reserve(n);
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % kSyntheticClasses);
    Rng rng = Rng::derive({.base_seed = seed, .image_index = i, .purpose = Purpose::Synthetic});
    Image image(side, side);
    for (int k = 0; k < kChannels; ++k) {
      for (double& v : image.plane(k)) {
        v = rng.uniform_in(0.0, 60.0);
        if (k == label) v += rng.uniform_in(120.0, 200.0);
      }
    }
    ds.images.push_back(to_storage(std::move(image)));
    ds.labels.push_back(label);
  }
  return ds;
}

}  // namespace ccp
