#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ccp {

inline constexpr int kChannels = 3;

// An H×W RGB image held as 64-bit reals in channel-planar order: every red
// sample first, then green, then blue, each plane row-major. Pixel (r, c) of
// channel k lives at k·H·W + r·W + c.
//
// Values are either in the storage domain (integers in [0, 255]) or in the
// compute domain (any real). Conversion is explicit, see to_storage().
class Image {
 public:
  Image() = default;
  Image(int height, int width);
  Image(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int channel, int row, int col) { return data_[index(channel, row, col)]; }
  double at(int channel, int row, int col) const { return data_[index(channel, row, col)]; }

  std::span<double> plane(int channel) {
    return std::span<double>(data_).subspan(channel * plane_size(), plane_size());
  }
  std::span<const double> plane(int channel) const {
    return std::span<const double>(data_).subspan(channel * plane_size(), plane_size());
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int channel, int row, int col) const {
    return channel * plane_size() + static_cast<std::size_t>(row) * width_ + col;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Clamp to [0, 255], then round half away from zero.
double to_storage_value(double value);

// Storage-domain copy of `image`. Idempotent.
Image to_storage(Image image);

// Identity on values; marks the point where an image enters real-valued math.
Image to_compute(Image image);

bool is_storage_domain(const Image& image);

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }

  // Throws DataError when images/labels disagree in count, shapes differ,
  // or a label falls outside [0, num_classes).
  void validate() const;
};

}  // namespace ccp
