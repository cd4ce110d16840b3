#include "ccp/channel_perturbation.hpp"

#include <cmath>
#include <string>

#include "ccp/errors.hpp"
#include "ccp/parallel.hpp"

namespace ccp {

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::Fixed ? "fixed" : "variable";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "fixed") return Scheme::Fixed;
  if (text == "variable") return Scheme::Variable;
  throw DataError("unknown CCP scheme '" + std::string(text) + "' (fixed|variable)");
}

CcpParams CcpParams::cifar_profile(Scheme scheme) {
  return {.scale = 2.0, .bias = 0.0, .lower = 0.0, .upper = 1.0, .scheme = scheme};
}

CcpParams CcpParams::highres_profile(Scheme scheme) {
  return {.scale = 1.0, .bias = 30.0, .lower = 0.0, .upper = 1.0, .scheme = scheme};
}

void CcpParams::validate() const {
  if (!std::isfinite(scale) || !std::isfinite(bias) || !std::isfinite(lower) ||
      !std::isfinite(upper)) {
    throw DataError("CCP parameters must be finite");
  }
  if (lower > upper) {
    throw DataError("CCP weight bounds inverted: lower " + std::to_string(lower) + " > upper " +
                    std::to_string(upper));
  }
}

WeightMatrix draw_weights(Rng& rng, double lower, double upper) {
  WeightMatrix w;
  for (auto* row : {&w.alpha, &w.beta, &w.gamma}) {
    for (double& v : *row) v = rng.uniform_in(lower, upper);
  }
  return w;
}

WeightMatrix draw_weights(const CcpTrialPlan& plan, std::size_t image_index) {
  const std::uint64_t index =
      plan.params.scheme == Scheme::Fixed ? 0 : static_cast<std::uint64_t>(image_index);
  Rng rng = Rng::derive({.base_seed = plan.base_seed,
                         .trial_index = plan.trial_index,
                         .image_index = index,
                         .purpose = Purpose::CcpWeights});
  return draw_weights(rng, plan.params.lower, plan.params.upper);
}

Image apply_ccp(const Image& image, const WeightMatrix& weights, const CcpParams& params) {
  Image out(image.height(), image.width());
  const auto red = image.plane(0);
  const auto green = image.plane(1);
  const auto blue = image.plane(2);
  const std::array<const std::array<double, 3>*, 3> rows{&weights.alpha, &weights.beta,
                                                         &weights.gamma};
  for (int k = 0; k < kChannels; ++k) {
    const auto& w = *rows[k];
    auto dst = out.plane(k);
    for (std::size_t p = 0; p < dst.size(); ++p) {
      const double mixed = w[0] * red[p] + w[1] * green[p] + w[2] * blue[p];
      dst[p] = params.scale * (mixed / 3.0) + params.bias;
    }
  }
  return out;
}

std::vector<Image> attack_images(std::span<const Image> images, const CcpTrialPlan& plan,
                                 int workers) {
  plan.params.validate();
  std::vector<Image> out(images.size());
  parallel_for(images.size(), workers, [&](std::size_t i) {
    out[i] = to_storage(apply_ccp(to_compute(images[i]), draw_weights(plan, i), plan.params));
  });
  return out;
}

Dataset attack_dataset(const Dataset& dataset, const CcpTrialPlan& plan, int workers) {
  Dataset out;
  out.images = attack_images(dataset.images, plan, workers);
  out.labels = dataset.labels;
  out.num_classes = dataset.num_classes;
  return out;
}

}  // namespace ccp
