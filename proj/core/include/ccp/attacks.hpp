#pragma once

#include <vector>

#include "ccp/image.hpp"
#include "ccp/model.hpp"
#include "ccp/prng.hpp"

namespace ccp {

struct FgsmParams {
  double epsilon = 8.0;  // raw intensity units out of 255
};

// Untargeted single-step attack: to_storage(x + ε·sign(∇x CE(x, label))).
Image fgsm_attack(const Model& model, const Image& image, int label, const FgsmParams& params);

struct OnePixelParams {
  int pixel_budget = 1;
  int population = 50;
  int iterations = 40;
  double differential_weight = 0.5;  // F
  double crossover_rate = 0.9;       // CR
  // When non-empty, applied intensities snap to the nearest listed level.
  std::vector<double> intensity_levels;

  void validate() const;
};

// A candidate holds pixel_budget 5-tuples (row, col, R, G, B).
using Candidate = std::vector<double>;

// Writes each tuple into a copy of `image`: row/col rounded and clamped into
// bounds, intensities clamped to [0, 255], rounded (or snapped to a level).
Image apply_candidate(const Image& image, const Candidate& candidate,
                      const OnePixelParams& params);

struct OnePixelResult {
  Image image;
  Candidate candidate;
  double fitness = 0.0;  // model probability of the true label; lower is better
};

// DE/rand/1/bin over candidates, minimising the true-label probability.
// The model is queried through forward() only. Randomness comes solely
// from `seed`, re-tagged with Purpose::AttackSearch.
OnePixelResult one_pixel_search(const Model& model, const Image& image, int label,
                                const OnePixelParams& params, const SeedPath& seed);

// The image of the best final candidate, whether or not the label flipped.
Image one_pixel_attack(const Model& model, const Image& image, int label,
                       const OnePixelParams& params, const SeedPath& seed);

}  // namespace ccp
