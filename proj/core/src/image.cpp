#include "ccp/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ccp/errors.hpp"

namespace ccp {

Image::Image(int height, int width)
    : Image(height, width,
            std::vector<double>(static_cast<std::size_t>(std::max(height, 0)) *
                                std::max(width, 0) * kChannels)) {}

Image::Image(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 0 || width < 0) {
    throw DataError("image dimensions must be non-negative");
  }
  const std::size_t expected = static_cast<std::size_t>(height) * width * kChannels;
  if (data_.size() != expected) {
    throw DataError("image data holds " + std::to_string(data_.size()) +
                    " values, expected " + std::to_string(expected));
  }
}

double to_storage_value(double value) {
  if (std::isnan(value)) {
    throw InvariantError("NaN intensity reached the storage boundary");
  }
  return std::round(std::clamp(value, 0.0, 255.0));
}

Image to_storage(Image image) {
  for (double& v : image.data()) v = to_storage_value(v);
  return image;
}

Image to_compute(Image image) { return image; }

bool is_storage_domain(const Image& image) {
  return std::ranges::all_of(image.data(), [](double v) {
    return v >= 0.0 && v <= 255.0 && v == std::floor(v);
  });
}

void Dataset::validate() const {
  if (images.size() != labels.size()) {
    throw DataError("dataset has " + std::to_string(images.size()) + " images but " +
                    std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(images.front())) {
      throw DataError("image " + std::to_string(i) + " differs in shape from image 0");
    }
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw DataError("label " + std::to_string(labels[i]) + " of sample " + std::to_string(i) +
                      " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

}  // namespace ccp
