#include "ccp/ppm.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "ccp/cifar.hpp"
#include "ccp/errors.hpp"

namespace ccp {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  long read_uint(const char* what) {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw FormatError(std::string("PPM: ") + what + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw FormatError(std::string("PPM: missing ") + what);
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header = "P6\n" + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + image.size());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      for (int k = 0; k < kChannels; ++k) {
        out.push_back(static_cast<std::uint8_t>(to_storage_value(image.at(k, r, c))));
      }
    }
  }
  return out;
}

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw FormatError("PPM: not a binary P6 file");
  }
  HeaderReader reader(bytes);
  reader.advance(2);
  const long width = reader.read_uint("width");
  const long height = reader.read_uint("height");
  const long maxval = reader.read_uint("maxval");
  if (maxval != 255) {
    throw FormatError("PPM: maxval " + std::to_string(maxval) + " unsupported, need 255");
  }
  if (reader.pos() >= bytes.size() || !std::isspace(bytes[reader.pos()])) {
    throw FormatError("PPM: missing whitespace after header");
  }
  reader.advance(1);

  const std::size_t payload = static_cast<std::size_t>(width) * height * kChannels;
  if (bytes.size() - reader.pos() < payload) {
    throw FormatError("PPM: truncated pixel payload, expected " + std::to_string(payload) +
                      " bytes, found " + std::to_string(bytes.size() - reader.pos()));
  }
  Image image(static_cast<int>(height), static_cast<int>(width));
  std::size_t p = reader.pos();
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      for (int k = 0; k < kChannels; ++k) image.at(k, r, c) = bytes[p++];
    }
  }
  return image;
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  write_file_bytes(path, encode_ppm(image));
}

Image read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file_bytes(path)); }

std::vector<PpmFile> read_ppm_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError(dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      paths.push_back(entry.path());
    }
  }
  std::ranges::sort(paths);
  std::vector<PpmFile> files;
  files.reserve(paths.size());
  for (const auto& p : paths) files.push_back({p.filename().string(), read_ppm(p)});
  return files;
}

}  // namespace ccp
