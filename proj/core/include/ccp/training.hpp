#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ccp/channel_perturbation.hpp"
#include "ccp/image.hpp"
#include "ccp/model.hpp"

namespace ccp {

struct LrStage {
  int epochs = 0;
  double learning_rate = 0.0;
};

// On-the-fly CCP_v augmentation: each occurrence of a training image is,
// with `probability`, replaced by a CCP transform with freshly drawn weights.
struct CcpAugmentation {
  CcpParams params = CcpParams::cifar_profile(Scheme::Variable);
  double probability = 0.5;
};

struct TrainConfig {
  int epochs = 0;
  int batch_size = 32;
  std::vector<LrStage> schedule;  // stage epochs must sum to `epochs`
  std::uint64_t seed = 0;
  std::optional<CcpAugmentation> augmentation;
  bool horizontal_flip = false;
  int workers = 1;

  void validate() const;
};

std::vector<LrStage> constant_schedule(int epochs, double learning_rate);

struct EpochStats {
  double loss = 0.0;      // mean over the epoch's samples
  double accuracy = 0.0;  // on the (possibly augmented) training batches
};

struct TrainingLog {
  std::vector<EpochStats> epochs;
};

// The training-time view of sample `index` in `epoch`: CCP augmentation
// and flipping applied as configured. Labels are never touched.
Image augmented_sample(const Image& image, const TrainConfig& config, int epoch,
                       std::size_t index);

// Mini-batch Adam on mean cross-entropy. Each epoch visits the data in a
// seeded Fisher–Yates order. Throws DataError on an empty dataset.
TrainingLog train(Model& model, const Dataset& train_set, const TrainConfig& config);

std::vector<int> predict(const Model& model, std::span<const Image> images, int workers = 1);

// Fraction of argmax predictions equal to the labels (ties to the lowest
// class index). An empty dataset scores 0.
double evaluate(const Model& model, const Dataset& dataset, int workers = 1);
double accuracy(std::span<const int> predictions, std::span<const int> labels);

}  // namespace ccp
