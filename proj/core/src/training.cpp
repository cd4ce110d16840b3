#include "ccp/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ccp/errors.hpp"
#include "ccp/parallel.hpp"
#include "ccp/prng.hpp"

namespace ccp {
namespace {

constexpr std::size_t kEvalChunk = 256;

Image flipped(const Image& image) {
  Image out(image.height(), image.width());
  for (int k = 0; k < kChannels; ++k) {
    for (int r = 0; r < image.height(); ++r) {
      for (int c = 0; c < image.width(); ++c) {
        out.at(k, r, c) = image.at(k, r, image.width() - 1 - c);
      }
    }
  }
  return out;
}

double learning_rate_for(const std::vector<LrStage>& schedule, int epoch) {
  int end = 0;
  for (const auto& stage : schedule) {
    end += stage.epochs;
    if (epoch < end) return stage.learning_rate;
  }
  throw InvariantError("epoch " + std::to_string(epoch) + " beyond learning-rate schedule");
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw DataError("epochs must be non-negative");
  if (batch_size <= 0) throw DataError("batch size must be positive");
  int total = 0;
  for (const auto& stage : schedule) {
    if (stage.epochs < 0) throw DataError("learning-rate stage with negative epochs");
    if (!(stage.learning_rate > 0.0) || !std::isfinite(stage.learning_rate)) {
      throw DataError("learning rates must be positive and finite");
    }
    total += stage.epochs;
  }
  if (total != epochs) {
    throw DataError("learning-rate schedule covers " + std::to_string(total) + " epochs, need " +
                    std::to_string(epochs));
  }
  if (augmentation) {
    augmentation->params.validate();
    if (!(augmentation->probability >= 0.0 && augmentation->probability <= 1.0)) {
      throw DataError("augmentation probability must lie in [0, 1]");
    }
  }
}

std::vector<LrStage> constant_schedule(int epochs, double learning_rate) {
  return {LrStage{epochs, learning_rate}};
}

Image augmented_sample(const Image& image, const TrainConfig& config, int epoch,
                       std::size_t index) {
  Rng rng = Rng::derive({.base_seed = config.seed,
                         .trial_index = static_cast<std::uint64_t>(epoch),
                         .image_index = index,
                         .purpose = Purpose::Augmentation});
  // The first draw is always consumed so the flip draw lands at the same
  // position whether or not CCP augmentation is configured.
  const double u = rng.next_uniform();
  Image out = image;
  if (config.augmentation && u < config.augmentation->probability) {
    const auto& aug = *config.augmentation;
    const WeightMatrix w = draw_weights(rng, aug.params.lower, aug.params.upper);
    out = to_storage(apply_ccp(to_compute(out), w, aug.params));
  }
  if (config.horizontal_flip && rng.next_uniform() < 0.5) out = flipped(out);
  return out;
}

TrainingLog train(Model& model, const Dataset& train_set, const TrainConfig& config) {
  config.validate();
  train_set.validate();
  if (train_set.empty()) throw DataError("cannot train on an empty dataset");
  if (train_set.num_classes > model.num_classes()) {
    throw DataError("dataset has " + std::to_string(train_set.num_classes) +
                    " classes, model outputs " + std::to_string(model.num_classes()));
  }

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  TrainingLog log;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = Rng::derive({.base_seed = config.seed,
                               .trial_index = static_cast<std::uint64_t>(epoch),
                               .purpose = Purpose::Shuffle});
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);

    const double lr = learning_rate_for(config.schedule, epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t count = std::min<std::size_t>(config.batch_size, n - start);
      std::vector<Image> images(count);
      std::vector<int> labels(count);
      parallel_for(count, config.workers, [&](std::size_t j) {
        const std::size_t idx = order[start + j];
        images[j] = augmented_sample(train_set.images[idx], config, epoch, idx);
        labels[j] = train_set.labels[idx];
      });

      const BatchTrace trace = forward_trace(model, images, config.workers);
      for (std::size_t j = 0; j < count; ++j) {
        if (argmax(trace.samples[j].probabilities()) == labels[j]) ++correct;
      }
      const Gradients grads = backward(model, trace, labels, config.workers);
      loss_sum += grads.loss * static_cast<double>(count);
      adam_step(model, grads.params, lr);
    }
    log.epochs.push_back({loss_sum / static_cast<double>(n),
                          static_cast<double>(correct) / static_cast<double>(n)});
  }
  return log;
}

std::vector<int> predict(const Model& model, std::span<const Image> images, int workers) {
  std::vector<int> out;
  out.reserve(images.size());
  for (std::size_t start = 0; start < images.size(); start += kEvalChunk) {
    const auto chunk = images.subspan(start, std::min(kEvalChunk, images.size() - start));
    const ProbMatrix probs = forward(model, chunk, workers);
    for (std::size_t i = 0; i < chunk.size(); ++i) out.push_back(argmax(probs.row(i)));
  }
  return out;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw DataError("accuracy: prediction and label counts differ");
  }
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double evaluate(const Model& model, const Dataset& dataset, int workers) {
  dataset.validate();
  return accuracy(predict(model, dataset.images, workers), dataset.labels);
}

}  // namespace ccp
