#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "ccp/analysis.hpp"
#include "ccp/channel_perturbation.hpp"
#include "ccp/cifar.hpp"
#include "ccp/ppm.hpp"
#include "ccp/synthetic.hpp"
#include "cli.hpp"
#include "support.hpp"

using namespace ccp;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation ccp_run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t file_count(const fs::path& dir) {
  return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}));
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto help = ccp_run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("gen-synthetic") != std::string::npos);
  CHECK(ccp_run({"attack", "--help"}).code == 0);

  const auto unknown = ccp_run({"attack", "--bogus"});
  CHECK(unknown.code == 1);
  CHECK_FALSE(unknown.err.empty());
  CHECK(ccp_run({}).code == 1);
  CHECK(ccp_run({"dance"}).code == 1);
  CHECK(ccp_run({"attack", "--method", "laser", "--in", "a", "--out", "b"}).code == 1);
}

TEST_CASE("missing input is a data error") {
  test::TempDir dir;
  const auto r = ccp_run({"eval", "--model", (dir / "none.ccpm").string(), "--in",
                          (dir / "none.bin").string()});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
  CHECK(ccp_run({"hist", "--in", (dir / "none.ppm").string(), "--out", (dir / "h.csv").string()})
            .code == 2);
  CHECK_FALSE(fs::exists(dir / "h.csv"));
}

TEST_CASE("gen-synthetic") {
  test::TempDir dir;
  const auto a = dir / "a.bin";
  const auto b = dir / "b.bin";
  REQUIRE(ccp_run({"gen-synthetic", "--per-class", "34", "--size", "8", "--seed", "3", "--out",
                   a.string()})
              .code == 0);
  REQUIRE(ccp_run({"gen-synthetic", "--per-class", "34", "--size", "8", "--seed", "3", "--out",
                   b.string()})
              .code == 0);
  CHECK(test::slurp(a) == test::slurp(b));
  CHECK(fs::file_size(a) == 102 * (1 + 8 * 8 * 3));

  const Dataset ds = load_cifar_binary(a, 102, {8, 3});
  CHECK(encode_cifar_binary(ds) == read_file_bytes(a));
  double mean[3] = {0, 0, 0};
  int class0 = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.labels[i] == static_cast<int>(i % 3));
    if (ds.labels[i] != 0) continue;
    ++class0;
    for (int k = 0; k < 3; ++k)
      for (double v : ds.images[i].plane(k)) mean[k] += v;
  }
  CHECK(class0 == 34);
  CHECK(mean[0] > mean[1]);
  CHECK(mean[0] > mean[2]);

  CHECK(ccp_run({"gen-synthetic", "--size", "0", "--out", (dir / "c.bin").string()}).code == 1);
  CHECK_FALSE(fs::exists(dir / "c.bin"));
}

TEST_CASE("attack modes") {
  test::TempDir dir;
  write_cifar_binary(generate_dominant_channel(4, 8, 1), dir / "set.bin");

  SUBCASE("ccp on a CIFAR file matches the library") {
    const auto r = ccp_run({"attack", "--method", "ccp", "--scheme", "fixed", "--side", "8",
                            "--num-classes", "3", "--seed", "9", "--trial", "2", "--in",
                            (dir / "set.bin").string(), "--out", (dir / "out.bin").string()});
    REQUIRE(r.code == 0);
    const Dataset ds = load_cifar_binary(dir / "set.bin", {8, 3});
    const Dataset expected =
        attack_dataset(ds, {CcpParams::cifar_profile(Scheme::Fixed), 9, 2});
    CHECK(read_file_bytes(dir / "out.bin") == encode_cifar_binary(expected));
  }
  SUBCASE("ccp on PPM file and directory with the highres profile") {
    const Dataset ds = generate_dominant_channel(1, 5, 2);
    fs::create_directories(dir / "ppm");
    for (std::size_t i = 0; i < ds.size(); ++i)
      write_ppm(ds.images[i], dir / "ppm" / ("img" + std::to_string(i) + ".ppm"));
    REQUIRE(ccp_run({"attack", "--method", "ccp", "--profile", "highres", "--in",
                     (dir / "ppm").string(), "--out", (dir / "ppm_out").string(), "--workers", "2"})
                .code == 0);
    CHECK(file_count(dir / "ppm_out") == 3);
    const auto plan = CcpTrialPlan{CcpParams::highres_profile(), 0, 0};
    const Image expected = to_storage(apply_ccp(ds.images[1], draw_weights(plan, 1), plan.params));
    CHECK(read_ppm(dir / "ppm_out" / "img1.ppm") == expected);

    REQUIRE(ccp_run({"attack", "--method", "ccp", "--in", (dir / "ppm" / "img0.ppm").string(),
                     "--out", (dir / "single.ppm").string()})
                .code == 0);
    CHECK(is_storage_domain(read_ppm(dir / "single.ppm")));
  }
  SUBCASE("fgsm and onepixel need a model") {
    const std::string set = (dir / "set.bin").string();
    CHECK(ccp_run({"attack", "--method", "fgsm", "--side", "8", "--num-classes", "3", "--in", set,
                   "--out", (dir / "f.bin").string()})
              .code == 1);
    CHECK_FALSE(fs::exists(dir / "f.bin"));
    REQUIRE(ccp_run({"train", "--train", set, "--side", "8", "--num-classes", "3", "--epochs", "1",
                     "--out", (dir / "m.ccpm").string()})
                .code == 0);
    CHECK(ccp_run({"attack", "--method", "fgsm", "--side", "8", "--num-classes", "3", "--in", set,
                   "--model", (dir / "m.ccpm").string(), "--out", (dir / "f.bin").string()})
              .code == 0);
    CHECK(ccp_run({"attack", "--method", "onepixel", "--side", "8", "--num-classes", "3", "--pop",
                   "4", "--iters", "1", "--in", set, "--model", (dir / "m.ccpm").string(),
                   "--out", (dir / "p.bin").string()})
              .code == 0);
    CHECK(fs::file_size(dir / "f.bin") == fs::file_size(dir / "set.bin"));
    CHECK(fs::file_size(dir / "p.bin") == fs::file_size(dir / "set.bin"));
  }
  SUBCASE("invalid bounds fail before any output") {
    const auto r = ccp_run({"attack", "--method", "ccp", "--lower", "2", "--upper", "1", "--side",
                            "8", "--num-classes", "3", "--in", (dir / "set.bin").string(), "--out",
                            (dir / "bad.bin").string()});
    CHECK(r.code == 1);
    CHECK_FALSE(fs::exists(dir / "bad.bin"));
  }
  SUBCASE("a corrupt file is a data error") {
    write_file_bytes(dir / "short.bin", std::vector<std::uint8_t>(5, 0));
    CHECK(ccp_run({"attack", "--method", "ccp", "--side", "8", "--num-classes", "3", "--in",
                   (dir / "short.bin").string(), "--out", (dir / "o.bin").string()})
              .code == 2);
    CHECK_FALSE(fs::exists(dir / "o.bin"));
  }
}

TEST_CASE("hist writes 3x256 rows") {
  test::TempDir dir;
  std::mt19937_64 gen(1);
  write_ppm(test::random_storage_image(gen, 6, 6), dir / "x.ppm");
  REQUIRE(ccp_run({"hist", "--in", (dir / "x.ppm").string(), "--out", (dir / "h.csv").string()})
              .code == 0);
  const std::string csv = test::slurp(dir / "h.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 768);
}

TEST_CASE("train then eval") {
  test::TempDir dir;
  const std::string set = (dir / "set.bin").string();
  write_cifar_binary(generate_dominant_channel(10, 8, 1), set);
  const auto r = ccp_run({"train", "--train", set, "--side", "8", "--num-classes", "3", "--epochs",
                          "3", "--lr", "0.01", "--augment", "--seed", "4", "--out",
                          (dir / "m.ccpm").string(), "--log", (dir / "log.csv").string()});
  REQUIRE(r.code == 0);
  CHECK(test::slurp(dir / "log.csv").starts_with("epoch,loss,accuracy\n0,"));
  const auto e1 = ccp_run({"eval", "--model", (dir / "m.ccpm").string(), "--in", set});
  const auto e2 = ccp_run({"eval", "--model", (dir / "m.ccpm").string(), "--in", set, "--workers",
                           "3"});
  REQUIRE(e1.code == 0);
  CHECK(e1.out.starts_with("accuracy "));
  CHECK(e1.out == e2.out);

  CHECK(ccp_run({"train", "--train", set, "--side", "8", "--num-classes", "3", "--epochs", "2",
                 "--lr-schedule", "1:0.01", "--out", (dir / "bad.ccpm").string()})
            .code == 1);
  CHECK(ccp_run({"eval", "--model", (dir / "m.ccpm").string(), "--in", set, "--workers", "0"})
            .code == 1);
  CHECK_FALSE(fs::exists(dir / "bad.ccpm"));
}

TEST_CASE("experiment subcommand") {
  test::TempDir dir;
  write_cifar_binary(generate_dominant_channel(6, 8, 1), dir / "train.bin");
  write_cifar_binary(generate_dominant_channel(3, 8, 2), dir / "test.bin");
  write_text_file(dir / "plan.txt",
                  "train_path = train.bin\ntest_path = test.bin\nimage_side = 8\n"
                  "num_classes = 3\ntrials = 2\nattacks = ccp, fgsm\nepochs = 1\n");
  const auto r = ccp_run({"experiment", "--plan", (dir / "plan.txt").string(), "--out",
                          (dir / "out").string(), "--workers", "2"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("plain model: clean accuracy") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "augmented_results.csv"));

  write_text_file(dir / "bad.txt", "train_path = train.bin\ntest_path = test.bin\ntrials = 0\n");
  CHECK(ccp_run({"experiment", "--plan", (dir / "bad.txt").string(), "--out",
                 (dir / "out2").string()})
            .code == 1);
  CHECK_FALSE(fs::exists(dir / "out2"));
}
