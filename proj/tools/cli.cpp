#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <functional>
#include <optional>

#include <fmt/format.h>

#include "ccp/analysis.hpp"
#include "ccp/attacks.hpp"
#include "ccp/channel_perturbation.hpp"
#include "ccp/checkpoint.hpp"
#include "ccp/cifar.hpp"
#include "ccp/errors.hpp"
#include "ccp/harness.hpp"
#include "ccp/parallel.hpp"
#include "ccp/ppm.hpp"
#include "ccp/synthetic.hpp"
#include "ccp/training.hpp"

namespace ccp::cli {
namespace {

namespace fs = std::filesystem;

// Flags shared by the commands that take CCP parameters. Explicit --scale
// and --bias override the profile.
struct CcpFlags {
  std::string scheme = "variable";
  std::string profile = "cifar";
  std::optional<double> scale;
  std::optional<double> bias;
  double lower = 0.0;
  double upper = 1.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--scheme", scheme, "CCP weight scheme")
        ->check(CLI::IsMember({"fixed", "variable"}))
        ->capture_default_str();
    cmd->add_option("--profile", profile, "s/b preset: cifar (s=2,b=0) or highres (s=1,b=30)")
        ->check(CLI::IsMember({"cifar", "highres"}))
        ->capture_default_str();
    cmd->add_option("--scale", scale, "scale factor s (overrides profile)");
    cmd->add_option("--bias", bias, "bias b (overrides profile)");
    cmd->add_option("--lower", lower, "lower weight bound L")->capture_default_str();
    cmd->add_option("--upper", upper, "upper weight bound U")->capture_default_str();
  }

  CcpParams params() const {
    const Scheme s = parse_scheme(scheme);
    CcpParams p = profile == "highres" ? CcpParams::highres_profile(s) : CcpParams::cifar_profile(s);
    if (scale) p.scale = *scale;
    if (bias) p.bias = *bias;
    p.lower = lower;
    p.upper = upper;
    p.validate();
    return p;
  }
};

struct LayoutFlags {
  int side = 32;
  int num_classes = 10;
  std::size_t count = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--side", side, "image side of CIFAR-binary records")->capture_default_str();
    cmd->add_option("--num-classes", num_classes, "number of classes")->capture_default_str();
    cmd->add_option("--count", count, "expected record count (0: infer from file size)")
        ->capture_default_str();
  }

  CifarLayout layout() const {
    if (side <= 0) throw UsageError("--side must be positive");
    if (num_classes <= 0 || num_classes > 256) throw UsageError("--num-classes must be in 1..256");
    return {side, num_classes};
  }

  Dataset load(const fs::path& path) const {
    return count == 0 ? load_cifar_binary(path, layout()) : load_cifar_binary(path, count, layout());
  }
};

// Turns parameter-validation DataErrors into usage errors.
template <typename Fn>
auto validated(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

std::vector<LrStage> parse_lr_schedule(const std::string& text) {
  std::vector<LrStage> stages;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("--lr-schedule entries look like epochs:lr");
    try {
      stages.push_back({std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw UsageError("bad --lr-schedule entry '" + item + "'");
    }
    start = end + 1;
  }
  return stages;
}

void require_exists(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file or directory: " + path.string());
}

// ---------------------------------------------------------------- attack

struct AttackCommand {
  std::string method = "ccp";
  CcpFlags ccp;
  LayoutFlags layout;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  std::string in;
  std::string out;
  std::string model_path;
  double epsilon = 8.0;
  OnePixelParams one_pixel;
  int workers = 1;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--method", method, "attack to run")
        ->check(CLI::IsMember({"ccp", "fgsm", "onepixel"}))
        ->capture_default_str();
    ccp.add_to(cmd);
    layout.add_to(cmd);
    cmd->add_option("--seed", seed, "base seed")->capture_default_str();
    cmd->add_option("--trial", trial, "trial index")->capture_default_str();
    cmd->add_option("--in", in, "CIFAR-binary file, .ppm image or directory of .ppm")->required();
    cmd->add_option("--out", out, "output file or directory (same kind as --in)")->required();
    cmd->add_option("--model", model_path, "checkpoint (fgsm, onepixel)");
    cmd->add_option("--epsilon", epsilon, "FGSM step, raw intensity units")->capture_default_str();
    cmd->add_option("--pop", one_pixel.population, "DE population")->capture_default_str();
    cmd->add_option("--iters", one_pixel.iterations, "DE generations")->capture_default_str();
    cmd->add_option("--pixels", one_pixel.pixel_budget, "pixel budget")->capture_default_str();
    cmd->add_option("--de-f", one_pixel.differential_weight, "DE differential weight F")
        ->capture_default_str();
    cmd->add_option("--de-cr", one_pixel.crossover_rate, "DE crossover rate CR")
        ->capture_default_str();
    cmd->add_option("--workers", workers, "parallel workers")->capture_default_str();
  }

  int run(std::ostream& out_stream) const {
    if (workers < 1) throw UsageError("--workers must be at least 1");
    const CcpParams params = validated([&] { return ccp.params(); });
    if (method != "ccp") {
      if (model_path.empty()) throw UsageError("--method " + method + " needs --model");
      if (method == "fgsm" && !(epsilon >= 0.0)) throw UsageError("--epsilon must be >= 0");
      if (method == "onepixel") validated([&] { one_pixel.validate(); });
    }
    const fs::path in_path(in);
    require_exists(in_path);

    if (fs::is_directory(in_path) || in_path.extension() == ".ppm") {
      if (method != "ccp") throw UsageError("fgsm and onepixel need a labelled CIFAR-binary input");
      return run_ppm(in_path, params, out_stream);
    }

    const Dataset ds = layout.load(in_path);
    Dataset attacked;
    if (method == "ccp") {
      attacked = attack_dataset(ds, {params, seed, trial}, workers);
    } else {
      const Model model = load_checkpoint(model_path);
      attacked.labels = ds.labels;
      attacked.num_classes = ds.num_classes;
      attacked.images.resize(ds.size());
      parallel_for(ds.size(), workers, [&](std::size_t i) {
        if (method == "fgsm") {
          attacked.images[i] = fgsm_attack(model, ds.images[i], ds.labels[i], {epsilon});
        } else {
          attacked.images[i] = one_pixel_attack(model, ds.images[i], ds.labels[i], one_pixel,
                                                {seed, trial, i, Purpose::AttackSearch});
        }
      });
    }
    write_cifar_binary(attacked, out);
    out_stream << fmt::format("attacked {} images with {} -> {}\n", attacked.size(), method, out);
    return kOk;
  }

  int run_ppm(const fs::path& in_path, const CcpParams& params, std::ostream& out_stream) const {
    const CcpTrialPlan plan{params, seed, trial};
    if (!fs::is_directory(in_path)) {
      const Image image = read_ppm(in_path);
      write_ppm(to_storage(apply_ccp(to_compute(image), draw_weights(plan, 0), params)), out);
      out_stream << fmt::format("attacked 1 image -> {}\n", out);
      return kOk;
    }
    const auto files = read_ppm_directory(in_path);
    std::vector<Image> images;
    for (const auto& f : files) images.push_back(f.image);
    const auto attacked = attack_images(images, plan, workers);
    fs::create_directories(out);
    for (std::size_t i = 0; i < files.size(); ++i) write_ppm(attacked[i], fs::path(out) / files[i].name);
    out_stream << fmt::format("attacked {} images -> {}\n", files.size(), out);
    return kOk;
  }
};

// ----------------------------------------------------------------- train

struct TrainCommand {
  LayoutFlags layout;
  CcpFlags ccp;
  std::string train_path;
  std::string out;
  std::string log_path;
  int epochs = 10;
  int batch = 32;
  double lr = 1e-3;
  std::string lr_schedule;
  std::uint64_t seed = 0;
  bool augment = false;
  double aug_prob = 0.5;
  bool hflip = false;
  int workers = 1;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--train", train_path, "CIFAR-binary training set")->required();
    cmd->add_option("--out", out, "checkpoint to write")->required();
    cmd->add_option("--log", log_path, "optional per-epoch CSV log");
    layout.add_to(cmd);
    cmd->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    cmd->add_option("--batch", batch, "batch size")->capture_default_str();
    cmd->add_option("--lr", lr, "constant learning rate")->capture_default_str();
    cmd->add_option("--lr-schedule", lr_schedule, "staged rates, e.g. 5:0.001,5:0.0005");
    cmd->add_option("--seed", seed, "base seed")->capture_default_str();
    cmd->add_flag("--augment", augment, "CCP_v augmentation on the fly");
    cmd->add_option("--aug-prob", aug_prob, "augmentation probability")->capture_default_str();
    ccp.add_to(cmd);
    cmd->add_flag("--hflip", hflip, "random horizontal flips");
    cmd->add_option("--workers", workers, "parallel workers")->capture_default_str();
  }

  int run(std::ostream& out_stream) const {
    if (workers < 1) throw UsageError("--workers must be at least 1");
    TrainConfig config;
    config.epochs = epochs;
    config.batch_size = batch;
    config.schedule = lr_schedule.empty() ? constant_schedule(epochs, lr)
                                          : parse_lr_schedule(lr_schedule);
    config.seed = seed;
    config.horizontal_flip = hflip;
    config.workers = workers;
    if (augment) {
      CcpParams params = validated([&] { return ccp.params(); });
      params.scheme = Scheme::Variable;
      config.augmentation = CcpAugmentation{params, aug_prob};
    }
    validated([&] { config.validate(); });
    const CifarLayout cifar = layout.layout();

    require_exists(train_path);
    const Dataset ds = layout.load(train_path);
    Model model = Model::init(small_cnn(cifar.side, cifar.num_classes), seed);
    const TrainingLog log = train(model, ds, config);

    save_checkpoint(model, out);
    if (!log_path.empty()) {
      std::string csv = "epoch,loss,accuracy\n";
      for (std::size_t e = 0; e < log.epochs.size(); ++e) {
        csv += fmt::format("{},{:.6f},{:.4f}\n", e, log.epochs[e].loss, log.epochs[e].accuracy);
      }
      write_text_file(log_path, csv);
    }
    for (std::size_t e = 0; e < log.epochs.size(); ++e) {
      out_stream << fmt::format("epoch {} loss {:.4f} accuracy {:.4f}\n", e, log.epochs[e].loss,
                                log.epochs[e].accuracy);
    }
    return kOk;
  }
};

// ------------------------------------------------------------------ eval

struct EvalCommand {
  std::string model_path;
  std::string in;
  std::size_t count = 0;
  int workers = 1;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--model", model_path, "checkpoint")->required();
    cmd->add_option("--in", in, "CIFAR-binary test set")->required();
    cmd->add_option("--count", count, "expected record count (0: infer)")->capture_default_str();
    cmd->add_option("--workers", workers, "parallel workers")->capture_default_str();
  }

  int run(std::ostream& out_stream) const {
    if (workers < 1) throw UsageError("--workers must be at least 1");
    require_exists(model_path);
    require_exists(in);
    const Model model = load_checkpoint(model_path);
    if (model.input_height() != model.input_width()) {
      throw DataError("checkpoint input is not square; CIFAR records are");
    }
    const CifarLayout layout{model.input_height(), model.num_classes()};
    const Dataset ds = count == 0 ? load_cifar_binary(in, layout)
                                  : load_cifar_binary(in, count, layout);
    out_stream << fmt::format("accuracy {:.4f}\n", evaluate(model, ds, workers));
    return kOk;
  }
};

// ------------------------------------------------------------------ hist

struct HistCommand {
  std::string in;
  std::string out;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--in", in, "PPM image")->required();
    cmd->add_option("--out", out, "CSV with channel,bin,count rows")->required();
  }

  int run(std::ostream& out_stream) const {
    require_exists(in);
    write_text_file(out, histogram_csv(histogram(read_ppm(in))));
    out_stream << fmt::format("histogram -> {}\n", out);
    return kOk;
  }
};

// ------------------------------------------------------------ experiment

struct ExperimentCommand {
  std::string plan_path;
  std::string out;
  int workers = 1;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--plan", plan_path, "key = value plan file")->required();
    cmd->add_option("--out", out, "output directory")->required();
    cmd->add_option("--workers", workers, "parallel workers")->capture_default_str();
  }

  int run(std::ostream& out_stream) const {
    if (workers < 1) throw UsageError("--workers must be at least 1");
    require_exists(plan_path);
    const ExperimentPlan plan = validated([&] { return load_plan(plan_path); });
    const ExperimentResults results = run_experiment(plan, fs::path(out), workers);

    auto print = [&](const ModelResults& r) {
      out_stream << fmt::format("{} model: clean accuracy {:.4f}\n", r.name, r.clean_accuracy);
      for (const auto& rep : r.reports) {
        out_stream << fmt::format("  {:<9} mean {:.4f} std {:.4f} min {:.4f} max {:.4f} drop {:.2f}%\n",
                                  rep.attack, rep.mean, rep.std, rep.min, rep.max, rep.drop_percent);
      }
    };
    print(results.plain);
    if (results.augmented) print(*results.augmented);
    return kOk;
  }
};

// --------------------------------------------------------- gen-synthetic

struct GenSyntheticCommand {
  int per_class = 100;
  int size = 32;
  std::uint64_t seed = 0;
  std::string out;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--per-class", per_class, "images per class")->capture_default_str();
    cmd->add_option("--size", size, "image side")->capture_default_str();
    cmd->add_option("--seed", seed, "seed")->capture_default_str();
    cmd->add_option("--out", out, "CIFAR-binary output (3 classes)")->required();
  }

  int run(std::ostream& out_stream) const {
    if (size <= 0) throw UsageError("--size must be positive");
    if (per_class < 0) throw UsageError("--per-class must be non-negative");
    const Dataset ds = generate_dominant_channel(per_class, size, seed);
    write_cifar_binary(ds, out);
    out_stream << fmt::format("wrote {} images ({}x{}, 3 classes) -> {}\n", ds.size(), size, size,
                              out);
    return kOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Color channel perturbation attacks, baselines and defenses", "ccp"};
  app.require_subcommand(1);

  AttackCommand attack;
  TrainCommand train_cmd;
  EvalCommand eval;
  HistCommand hist;
  ExperimentCommand experiment;
  GenSyntheticCommand gen;

  std::function<int(std::ostream&)> selected;
  auto bind = [&](auto& command, const char* name, const char* description) {
    CLI::App* sub = app.add_subcommand(name, description);
    command.add_to(sub);
    sub->callback([&] { selected = [&](std::ostream& o) { return command.run(o); }; });
  };
  bind(attack, "attack", "apply CCP, FGSM or one-pixel attacks to images");
  bind(train_cmd, "train", "train the SmallCNN on a CIFAR-binary set");
  bind(eval, "eval", "accuracy of a checkpoint on a CIFAR-binary set");
  bind(hist, "hist", "per-channel 256-bin histogram of a PPM image");
  bind(experiment, "experiment", "multi-trial attack and defense experiment");
  bind(gen, "gen-synthetic", "write the 3-class dominant-channel dataset");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    return selected(out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kDataError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kDataError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}

}  // namespace ccp::cli
