#pragma once

#include <cstdint>

#include "ccp/image.hpp"

namespace ccp {

inline constexpr int kSyntheticClasses = 3;

// Three-class "dominant channel" images. Sample i has label i mod 3; every
// pixel of every channel gets noise uniform on [0, 60] and the labelled
// channel additionally gets a boost uniform on [120, 200]. Values are then
// brought to the storage domain. Each image draws from its own Synthetic
// stream, channel by channel in pixel order.
Dataset generate_dominant_channel(int per_class, int side, std::uint64_t seed);

}  // namespace ccp
