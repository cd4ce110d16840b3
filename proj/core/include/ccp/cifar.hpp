#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ccp/image.hpp"

namespace ccp {

// CIFAR-10 binary batch layout. Each record is one label byte followed by
// side·side bytes of red, then green, then blue, each plane row-major.
// No file header. The stock format is side = 32, ten classes; the synthetic
// datasets reuse the record layout with other sizes and class counts.
struct CifarLayout {
  int side = 32;
  int num_classes = 10;

  std::size_t record_size() const {
    return 1 + static_cast<std::size_t>(side) * side * kChannels;
  }
};

// Decodes `bytes`, which must hold exactly `expected_count` records.
// Throws FormatError on a length mismatch or a label byte >= num_classes.
Dataset decode_cifar_binary(std::span<const std::uint8_t> bytes, std::size_t expected_count,
                            const CifarLayout& layout = {});

Dataset load_cifar_binary(const std::filesystem::path& path, std::size_t expected_count,
                          const CifarLayout& layout = {});

// Infers the record count from the file length, which must be a whole
// number of records.
Dataset load_cifar_binary(const std::filesystem::path& path, const CifarLayout& layout = {});

// Storage-domain dataset to bytes. Pixel values are passed through
// to_storage_value first.
std::vector<std::uint8_t> encode_cifar_binary(const Dataset& dataset);
void write_cifar_binary(const Dataset& dataset, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace ccp
