#pragma once

#include <cstddef>
#include <cstdint>

namespace ccp {

// What a derived stream is used for. The numeric values are part of the
// seed derivation and must not change.
enum class Purpose : std::uint64_t {
  CcpWeights = 0,
  Augmentation = 1,
  AttackSearch = 2,
  ModelInit = 3,
  Shuffle = 4,
  Synthetic = 5,
};

// Coordinates of one random stream inside an experiment.
struct SeedPath {
  std::uint64_t base_seed = 0;
  std::uint64_t trial_index = 0;
  std::uint64_t image_index = 0;
  Purpose purpose = Purpose::CcpWeights;
};

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
// Offset applied to the purpose tag before mixing, so that tags and trial
// indices never map to the same mixed word.
inline constexpr std::uint64_t kPurposeOffset = 0x632BE59BD9B4E019ULL;

// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Starting state for a stream:
//
//   mix64(base ^ mix64(trial) ^ mix64(image * gamma) ^ mix64(purpose + offset))
//
// with gamma = 0x9E3779B97F4A7C15 and offset = 0x632BE59BD9B4E019, all
// arithmetic mod 2^64.
constexpr std::uint64_t derive_state(const SeedPath& path) {
  return mix64(path.base_seed ^ mix64(path.trial_index) ^
               mix64(path.image_index * kGoldenGamma) ^
               mix64(static_cast<std::uint64_t>(path.purpose) + kPurposeOffset));
}

// SplitMix64. Single owner, cheap to copy; parallel code derives one per
// work item instead of sharing.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t state) : state_(state) {}

  static constexpr Rng derive(const SeedPath& path) { return Rng(derive_state(path)); }

  constexpr std::uint64_t next_u64() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  constexpr double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform_in(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

  // Uniform integer in [0, n); n must be positive.
  std::size_t below(std::size_t n) {
    const auto k = static_cast<std::size_t>(next_uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  constexpr std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace ccp
