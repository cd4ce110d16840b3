#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccp/analysis.hpp"
#include "ccp/attacks.hpp"
#include "ccp/channel_perturbation.hpp"
#include "ccp/cifar.hpp"
#include "ccp/training.hpp"

namespace ccp {

// Plan file: one `key = value` per line, '#' starts a comment. Keys:
//
//   train_path, test_path   CIFAR-binary files, relative to the plan file
//   train_count, test_count expected record counts (0: infer from size)
//   image_side, num_classes record layout (defaults 32, 10)
//   trials                  attack trials per stochastic attack (30)
//   seed                    base seed for everything (0)
//   attacks                 comma list of ccp, fgsm, onepixel (all three)
//   scheme                  fixed | variable | both (both)
//   scale, bias             CCP s and b (2, 0)
//   lower, upper            CCP weight bounds (0, 1)
//   epsilon                 FGSM step in raw intensity units (8)
//   de_pop, de_iters        one-pixel DE population and generations (50, 40)
//   de_pixels, de_f, de_cr  pixel budget, F, CR (1, 0.5, 0.9)
//   augment                 also train a CCP-augmented model (true)
//   aug_prob                augmentation probability (0.5)
//   epochs, batch           training length and batch size (10, 32)
//   lr_schedule             "epochs:lr,epochs:lr" (constant 0.001)
//   hflip                   horizontal-flip augmentation (false)
struct ExperimentPlan {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  CifarLayout layout;
  int trials = 30;
  std::uint64_t seed = 0;
  std::vector<Scheme> schemes{Scheme::Fixed, Scheme::Variable};
  bool run_fgsm = true;
  bool run_one_pixel = true;
  CcpParams ccp = CcpParams::cifar_profile();
  FgsmParams fgsm;
  OnePixelParams one_pixel;
  bool augment = true;
  double aug_prob = 0.5;
  int epochs = 10;
  int batch_size = 32;
  std::vector<LrStage> lr_schedule;  // empty: constant 0.001
  bool horizontal_flip = false;

  // Throws DataError when trials < 1, the roster is empty, or any nested
  // parameter set is invalid.
  void validate() const;

  TrainConfig train_config(bool augmented, int workers) const;
};

// Relative paths are resolved against `base_dir`. Unknown keys and
// malformed values throw DataError.
ExperimentPlan parse_plan(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentPlan load_plan(const std::filesystem::path& path);

// Accuracy under the CCP attack for trials 0..trials-1.
std::vector<double> ccp_trial_accuracies(const Model& model, const Dataset& test,
                                         const CcpParams& params, std::uint64_t base_seed,
                                         int trials, int workers);

double fgsm_accuracy(const Model& model, const Dataset& test, const FgsmParams& params,
                     int workers);

// One DE search per test image, seeded by (base_seed, trial, image index).
double one_pixel_accuracy(const Model& model, const Dataset& test, const OnePixelParams& params,
                          std::uint64_t base_seed, int trial, int workers);

struct ModelResults {
  std::string name;  // "plain" or "augmented"
  Model model;
  TrainingLog log;
  double clean_accuracy = 0.0;
  std::vector<TrialReport> reports;  // clean first, then the roster in plan order
};

struct ExperimentResults {
  ModelResults plain;
  std::optional<ModelResults> augmented;
};

// Trains the plain (and optionally augmented) model once, then evaluates
// every attack in the roster. Deterministic attacks (clean, FGSM) are
// evaluated once and repeated across trials.
ExperimentResults run_experiment(const ExperimentPlan& plan, const Dataset& train,
                                 const Dataset& test, int workers);

// Loads the datasets named in the plan, runs the experiment and writes
//   plain_model.ccpm, plain_results.csv,
//   augmented_model.ccpm, augmented_results.csv (when augment = true),
//   training_log.csv
// into `out_dir`. Nothing is written unless every stage succeeds.
ExperimentResults run_experiment(const ExperimentPlan& plan, const std::filesystem::path& out_dir,
                                 int workers);

std::string training_log_csv(const ExperimentResults& results);

}  // namespace ccp
