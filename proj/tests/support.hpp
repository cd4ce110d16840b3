#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "ccp/image.hpp"

namespace ccp::test {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ccp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Test data comes from std::mt19937_64 so it never shares a generator with
// the code under test.
inline Image random_storage_image(std::mt19937_64& gen, int height, int width) {
  std::uniform_int_distribution<int> byte(0, 255);
  Image image(height, width);
  for (double& v : image.data()) v = byte(gen);
  return image;
}

inline Image random_compute_image(std::mt19937_64& gen, int height, int width, double lo,
                                  double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Image image(height, width);
  for (double& v : image.data()) v = dist(gen);
  return image;
}

}  // namespace ccp::test
