#include "ccp/harness.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "ccp/checkpoint.hpp"
#include "ccp/errors.hpp"
#include "ccp/parallel.hpp"

namespace ccp {
namespace {

constexpr double kDefaultLearningRate = 1e-3;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    const auto item = trim(s.substr(start, pos - start));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError(fmt::format("plan: bad value '{}' for {}", text, key));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw DataError(fmt::format("plan: bad boolean '{}' for {}", text, key));
}

std::vector<LrStage> parse_schedule(std::string_view text) {
  std::vector<LrStage> stages;
  for (auto item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw DataError(fmt::format("plan: lr_schedule entry '{}' is not epochs:lr", item));
    }
    stages.push_back({parse_value<int>("lr_schedule", trim(item.substr(0, colon))),
                      parse_value<double>("lr_schedule", trim(item.substr(colon + 1)))});
  }
  return stages;
}

// Re-throws module errors with the experiment stage prefixed.
template <typename Fn>
auto in_stage(std::string_view stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", stage, e.what()));
  } catch (const IoError& e) {
    throw IoError(fmt::format("{}: {}", stage, e.what()));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", stage, e.what()));
  }
}

std::vector<TrialReport> evaluate_roster(const ExperimentPlan& plan, const Model& model,
                                         const Dataset& test, double clean, int workers) {
  const std::vector<double> clean_rows(plan.trials, clean);
  std::vector<TrialReport> reports;
  reports.push_back(aggregate("clean", clean_rows, clean));

  for (Scheme scheme : plan.schemes) {
    CcpParams params = plan.ccp;
    params.scheme = scheme;
    const auto accs = in_stage("ccp attack", [&] {
      return ccp_trial_accuracies(model, test, params, plan.seed, plan.trials, workers);
    });
    reports.push_back(aggregate(scheme == Scheme::Fixed ? "ccp_f" : "ccp_v", accs, clean));
  }
  if (plan.run_fgsm) {
    const double acc = in_stage("fgsm attack", [&] {
      return fgsm_accuracy(model, test, plan.fgsm, workers);
    });
    const std::vector<double> rows(plan.trials, acc);
    reports.push_back(aggregate("fgsm", rows, clean));
  }
  if (plan.run_one_pixel) {
    std::vector<double> accs;
    for (int t = 0; t < plan.trials; ++t) {
      accs.push_back(in_stage("one-pixel attack", [&] {
        return one_pixel_accuracy(model, test, plan.one_pixel, plan.seed, t, workers);
      }));
    }
    reports.push_back(aggregate("onepixel", accs, clean));
  }
  return reports;
}

ModelResults train_and_evaluate(const ExperimentPlan& plan, const Dataset& train_set,
                                const Dataset& test, bool augmented, int workers) {
  ModelResults r{augmented ? "augmented" : "plain",
                 Model::init(small_cnn(plan.layout.side, plan.layout.num_classes), plan.seed),
                 {}, 0.0, {}};
  r.log = in_stage(fmt::format("training {} model", r.name), [&] {
    return train(r.model, train_set, plan.train_config(augmented, workers));
  });
  r.clean_accuracy = in_stage("clean evaluation", [&] { return evaluate(r.model, test, workers); });
  r.reports = evaluate_roster(plan, r.model, test, r.clean_accuracy, workers);
  return r;
}

}  // namespace

void ExperimentPlan::validate() const {
  if (trials < 1) throw DataError("plan: trials must be at least 1");
  if (schemes.empty() && !run_fgsm && !run_one_pixel) {
    throw DataError("plan: attack roster is empty");
  }
  ccp.validate();
  if (!(fgsm.epsilon >= 0.0)) throw DataError("plan: epsilon must be non-negative");
  if (run_one_pixel) one_pixel.validate();
  train_config(augment, 1).validate();
}

TrainConfig ExperimentPlan::train_config(bool augmented, int workers) const {
  TrainConfig config;
  config.epochs = epochs;
  config.batch_size = batch_size;
  config.schedule = lr_schedule.empty() ? constant_schedule(epochs, kDefaultLearningRate)
                                        : lr_schedule;
  config.seed = seed;
  config.horizontal_flip = horizontal_flip;
  config.workers = workers;
  if (augmented) {
    CcpParams params = ccp;
    params.scheme = Scheme::Variable;
    config.augmentation = CcpAugmentation{params, aug_prob};
  }
  return config;
}

ExperimentPlan parse_plan(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentPlan plan;
  std::map<std::string, bool, std::less<>> seen;
  bool ccp_enabled = true;
  std::vector<Scheme> schemes{Scheme::Fixed, Scheme::Variable};
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw DataError(fmt::format("plan line {}: expected key = value", line_no));
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (seen[key]) throw DataError(fmt::format("plan line {}: duplicate key {}", line_no, key));
    seen[key] = true;

    auto path_value = [&] {
      std::filesystem::path p(value);
      return p.is_relative() ? base_dir / p : p;
    };
    if (key == "train_path") {
      plan.train_path = path_value();
    } else if (key == "test_path") {
      plan.test_path = path_value();
    } else if (key == "train_count") {
      plan.train_count = parse_value<std::size_t>(key, value);
    } else if (key == "test_count") {
      plan.test_count = parse_value<std::size_t>(key, value);
    } else if (key == "image_side") {
      plan.layout.side = parse_value<int>(key, value);
    } else if (key == "num_classes") {
      plan.layout.num_classes = parse_value<int>(key, value);
    } else if (key == "trials") {
      plan.trials = parse_value<int>(key, value);
    } else if (key == "seed") {
      plan.seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "attacks") {
      ccp_enabled = plan.run_fgsm = plan.run_one_pixel = false;
      for (auto item : split_list(value)) {
        if (item == "ccp") ccp_enabled = true;
        else if (item == "fgsm") plan.run_fgsm = true;
        else if (item == "onepixel") plan.run_one_pixel = true;
        else throw DataError(fmt::format("plan: unknown attack '{}'", item));
      }
    } else if (key == "scheme") {
      if (value == "both") schemes = {Scheme::Fixed, Scheme::Variable};
      else schemes = {parse_scheme(value)};
    } else if (key == "scale") {
      plan.ccp.scale = parse_value<double>(key, value);
    } else if (key == "bias") {
      plan.ccp.bias = parse_value<double>(key, value);
    } else if (key == "lower") {
      plan.ccp.lower = parse_value<double>(key, value);
    } else if (key == "upper") {
      plan.ccp.upper = parse_value<double>(key, value);
    } else if (key == "epsilon") {
      plan.fgsm.epsilon = parse_value<double>(key, value);
    } else if (key == "de_pop") {
      plan.one_pixel.population = parse_value<int>(key, value);
    } else if (key == "de_iters") {
      plan.one_pixel.iterations = parse_value<int>(key, value);
    } else if (key == "de_pixels") {
      plan.one_pixel.pixel_budget = parse_value<int>(key, value);
    } else if (key == "de_f") {
      plan.one_pixel.differential_weight = parse_value<double>(key, value);
    } else if (key == "de_cr") {
      plan.one_pixel.crossover_rate = parse_value<double>(key, value);
    } else if (key == "augment") {
      plan.augment = parse_bool(key, value);
    } else if (key == "aug_prob") {
      plan.aug_prob = parse_value<double>(key, value);
    } else if (key == "epochs") {
      plan.epochs = parse_value<int>(key, value);
    } else if (key == "batch") {
      plan.batch_size = parse_value<int>(key, value);
    } else if (key == "lr_schedule") {
      plan.lr_schedule = parse_schedule(value);
    } else if (key == "hflip") {
      plan.horizontal_flip = parse_bool(key, value);
    } else {
      throw DataError(fmt::format("plan line {}: unknown key '{}'", line_no, key));
    }
  }
  plan.schemes = ccp_enabled ? schemes : std::vector<Scheme>{};
  if (plan.train_path.empty() || plan.test_path.empty()) {
    throw DataError("plan: train_path and test_path are required");
  }
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open plan " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str(), path.parent_path());
}

std::vector<double> ccp_trial_accuracies(const Model& model, const Dataset& test,
                                         const CcpParams& params, std::uint64_t base_seed,
                                         int trials, int workers) {
  std::vector<double> accs;
  accs.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    const CcpTrialPlan trial{params, base_seed, static_cast<std::uint64_t>(t)};
    const Dataset attacked = attack_dataset(test, trial, workers);
    accs.push_back(evaluate(model, attacked, workers));
  }
  return accs;
}

double fgsm_accuracy(const Model& model, const Dataset& test, const FgsmParams& params,
                     int workers) {
  std::vector<Image> attacked(test.size());
  parallel_for(test.size(), workers, [&](std::size_t i) {
    attacked[i] = fgsm_attack(model, test.images[i], test.labels[i], params);
  });
  return accuracy(predict(model, attacked, workers), test.labels);
}

double one_pixel_accuracy(const Model& model, const Dataset& test, const OnePixelParams& params,
                          std::uint64_t base_seed, int trial, int workers) {
  std::vector<Image> attacked(test.size());
  parallel_for(test.size(), workers, [&](std::size_t i) {
    const SeedPath seed{base_seed, static_cast<std::uint64_t>(trial), i, Purpose::AttackSearch};
    attacked[i] = one_pixel_attack(model, test.images[i], test.labels[i], params, seed);
  });
  return accuracy(predict(model, attacked, workers), test.labels);
}

ExperimentResults run_experiment(const ExperimentPlan& plan, const Dataset& train_set,
                                 const Dataset& test, int workers) {
  plan.validate();
  ExperimentResults results{train_and_evaluate(plan, train_set, test, false, workers), {}};
  if (plan.augment) results.augmented = train_and_evaluate(plan, train_set, test, true, workers);
  return results;
}

std::string training_log_csv(const ExperimentResults& results) {
  std::string out = "model,epoch,loss,accuracy\n";
  auto append = [&](const ModelResults& r) {
    for (std::size_t e = 0; e < r.log.epochs.size(); ++e) {
      out += fmt::format("{},{},{:.6f},{:.4f}\n", r.name, e, r.log.epochs[e].loss,
                         r.log.epochs[e].accuracy);
    }
  };
  append(results.plain);
  if (results.augmented) append(*results.augmented);
  return out;
}

ExperimentResults run_experiment(const ExperimentPlan& plan, const std::filesystem::path& out_dir,
                                 int workers) {
  auto load = [&](const std::filesystem::path& path, std::size_t count) {
    return count == 0 ? load_cifar_binary(path, plan.layout)
                      : load_cifar_binary(path, count, plan.layout);
  };
  const Dataset train_set = in_stage("loading training set",
                                     [&] { return load(plan.train_path, plan.train_count); });
  const Dataset test = in_stage("loading test set",
                                [&] { return load(plan.test_path, plan.test_count); });
  ExperimentResults results = run_experiment(plan, train_set, test, workers);

  in_stage("writing results", [&] {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    save_checkpoint(results.plain.model, out_dir / "plain_model.ccpm");
    emit_csv(results.plain.reports, out_dir / "plain_results.csv");
    if (results.augmented) {
      save_checkpoint(results.augmented->model, out_dir / "augmented_model.ccpm");
      emit_csv(results.augmented->reports, out_dir / "augmented_results.csv");
    }
    write_text_file(out_dir / "training_log.csv", training_log_csv(results));
  });
  return results;
}

}  // namespace ccp
