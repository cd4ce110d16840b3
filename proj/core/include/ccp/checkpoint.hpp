#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ccp/model.hpp"

namespace ccp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout, all integers little-endian:
//   "CCPM"  u32 version  u32 input_height  u32 input_width  u32 layer_count
//   per layer: u8 kind (0 Conv2D, 1 ReLU, 2 MaxPool2, 3 Flatten, 4 Dense,
//              5 Softmax)  u32 argument (out channels / out dim, else 0)
//   u64 parameter_count, then that many IEEE-754 binary64 values in
//   declaration order.
// Optimizer state is not stored.
std::vector<std::uint8_t> encode_checkpoint(const Model& model);
Model decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace ccp
