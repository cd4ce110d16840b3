#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ccp/image.hpp"

namespace ccp {

// Binary PPM ("P6", maxval 255). Writing rounds half away from zero and
// clips to [0, 255]; reading yields a storage-domain image.
std::vector<std::uint8_t> encode_ppm(const Image& image);
Image decode_ppm(std::span<const std::uint8_t> bytes);

void write_ppm(const Image& image, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

struct PpmFile {
  std::string name;
  Image image;
};

// Every *.ppm directly inside `dir`, sorted by file name.
std::vector<PpmFile> read_ppm_directory(const std::filesystem::path& dir);

}  // namespace ccp
