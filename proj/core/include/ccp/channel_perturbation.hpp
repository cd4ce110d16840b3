#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ccp/image.hpp"
#include "ccp/prng.hpp"

namespace ccp {

// Fixed: one weight matrix per trial, shared by every image.
// Variable: an independent weight matrix for every image.
enum class Scheme { Fixed, Variable };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);

// Weights that build each output channel from (R, G, B):
//   out_R from alpha, out_G from beta, out_B from gamma.
struct WeightMatrix {
  std::array<double, 3> alpha{};
  std::array<double, 3> beta{};
  std::array<double, 3> gamma{};

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;
};

struct CcpParams {
  double scale = 2.0;
  double bias = 0.0;
  double lower = 0.0;
  double upper = 1.0;
  Scheme scheme = Scheme::Variable;

  // s = 2, b = 0: used for 32×32 natural images.
  static CcpParams cifar_profile(Scheme scheme = Scheme::Variable);
  // s = 1, b = 30: used for the larger-resolution datasets.
  static CcpParams highres_profile(Scheme scheme = Scheme::Variable);

  // Throws DataError unless lower <= upper and every field is finite.
  void validate() const;
};

// Everything needed to reproduce the weights of one trial.
struct CcpTrialPlan {
  CcpParams params;
  std::uint64_t base_seed = 0;
  std::uint64_t trial_index = 0;
};

// Nine draws from `rng` in the order αr αg αb βr βg βb γr γg γb, each uniform
// on [lower, upper].
WeightMatrix draw_weights(Rng& rng, double lower, double upper);

// Weight matrix for image `image_index`. Under the fixed scheme the index is
// ignored and every image sees the matrix of index 0.
WeightMatrix draw_weights(const CcpTrialPlan& plan, std::size_t image_index);

// Per pixel:  out_R = s · ((αr·R + αg·G + αb·B) / 3) + b,  likewise G with β
// and B with γ. Products are summed left to right, then divided by 3, scaled
// and biased, in that order. No clipping; the result stays in the compute
// domain.
Image apply_ccp(const Image& image, const WeightMatrix& weights, const CcpParams& params);

// to_storage(apply_ccp(image_i, draw_weights(plan, i))) for every image,
// order preserved. Per-image seeds make the output independent of `workers`.
std::vector<Image> attack_images(std::span<const Image> images, const CcpTrialPlan& plan,
                                 int workers = 1);

// attack_images over a dataset; labels and class count carried through.
Dataset attack_dataset(const Dataset& dataset, const CcpTrialPlan& plan, int workers = 1);

}  // namespace ccp
