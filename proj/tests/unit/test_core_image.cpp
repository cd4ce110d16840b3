#include <doctest.h>

#include <random>

#include "ccp/cifar.hpp"
#include "ccp/errors.hpp"
#include "ccp/ppm.hpp"
#include "support.hpp"

using namespace ccp;

namespace {

std::vector<std::uint8_t> record(std::uint8_t label, std::uint8_t fill) {
  std::vector<std::uint8_t> r(3073, fill);
  r[0] = label;
  return r;
}

}  // namespace

TEST_CASE("zero record decodes to a black image with label 0") {
  const std::vector<std::uint8_t> bytes(3073, 0);
  const Dataset ds = decode_cifar_binary(bytes, 1);
  REQUIRE(ds.size() == 1);
  CHECK(ds.num_classes == 10);
  CHECK(ds.labels[0] == 0);
  CHECK(ds.images[0].height() == 32);
  CHECK(ds.images[0].width() == 32);
  for (double v : ds.images[0].data()) CHECK(v == 0.0);
}

TEST_CASE("file length must equal count times 3073") {
  const std::vector<std::uint8_t> bytes(3072 * 2 + 1, 0);  // one byte short of two records
  REQUIRE(bytes.size() == 6145);
  try {
    decode_cifar_binary(bytes, 2);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("6146") != std::string::npos);
    CHECK(msg.find("6145") != std::string::npos);
  }
  CHECK_NOTHROW(decode_cifar_binary(std::vector<std::uint8_t>(6146, 0), 2));
}

TEST_CASE("label 7 with all pixels 255 is an all-white image") {
  std::vector<std::uint8_t> bytes;
  bytes.push_back(7);
  for (int i = 0; i < 3072; ++i) bytes.push_back(0xFF);
  const Dataset ds = decode_cifar_binary(bytes, 1);
  CHECK(ds.labels[0] == 7);
  for (double v : ds.images[0].data()) CHECK(v == 255.0);
}

TEST_CASE("label byte above 9 is reported with its record index") {
  auto bytes = record(3, 0);
  const auto bad = record(10, 0);
  bytes.insert(bytes.end(), bad.begin(), bad.end());
  try {
    decode_cifar_binary(bytes, 2);
    FAIL("expected a corrupt-record error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("record 1") != std::string::npos);
  }
}

TEST_CASE("pixel (r, c) of channel k sits at byte 1 + k*1024 + r*32 + c") {
  const int cases[][3] = {{0, 0, 0}, {0, 5, 9}, {1, 31, 0}, {2, 17, 31}, {2, 31, 31}};
  for (const auto& [k, r, c] : cases) {
    std::vector<std::uint8_t> bytes(3073, 0);
    bytes[1 + k * 1024 + r * 32 + c] = 200;
    const Image image = decode_cifar_binary(bytes, 1).images[0];
    for (int kk = 0; kk < 3; ++kk) {
      for (int rr = 0; rr < 32; ++rr) {
        for (int cc = 0; cc < 32; ++cc) {
          const double expected = (kk == k && rr == r && cc == c) ? 200.0 : 0.0;
          REQUIRE(image.at(kk, rr, cc) == expected);
        }
      }
    }
  }
}

TEST_CASE("loader is deterministic and encode inverts decode") {
  test::TempDir dir;
  std::mt19937_64 gen(5);
  std::vector<std::uint8_t> bytes;
  for (int i = 0; i < 4; ++i) {
    bytes.push_back(static_cast<std::uint8_t>(gen() % 10));
    for (int j = 0; j < 3072; ++j) bytes.push_back(static_cast<std::uint8_t>(gen()));
  }
  write_file_bytes(dir / "batch.bin", bytes);
  const Dataset a = load_cifar_binary(dir / "batch.bin", 4);
  const Dataset b = load_cifar_binary(dir / "batch.bin");
  CHECK(a.images == b.images);
  CHECK(a.labels == b.labels);
  CHECK(encode_cifar_binary(a) == bytes);
}

TEST_CASE("non-32 layouts and missing files") {
  Dataset ds;
  ds.num_classes = 3;
  ds.images = {Image(4, 4), Image(4, 4)};
  ds.images[1].at(2, 3, 1) = 9;
  ds.labels = {2, 1};
  const auto bytes = encode_cifar_binary(ds);
  CHECK(bytes.size() == 2 * (1 + 48));
  const Dataset back = decode_cifar_binary(bytes, 2, {.side = 4, .num_classes = 3});
  CHECK(back.images == ds.images);
  CHECK(back.labels == ds.labels);
  CHECK_THROWS_AS(load_cifar_binary("/nonexistent/ccp.bin"), IoError);
}

TEST_CASE("storage conversion clamps then rounds half away from zero") {
  CHECK(to_storage_value(510.0) == 255.0);
  CHECK(to_storage_value(-12.3) == 0.0);
  CHECK(to_storage_value(99.5) == 100.0);
  CHECK(to_storage_value(99.49) == 99.0);
  CHECK(to_storage_value(0.5) == 1.0);
  CHECK_THROWS_AS(to_storage_value(std::nan("")), InvariantError);

  std::mt19937_64 gen(11);
  for (int i = 0; i < 50; ++i) {
    const Image x = test::random_compute_image(gen, 3, 5, -400.0, 700.0);
    const Image once = to_storage(x);
    CHECK(is_storage_domain(once));
    CHECK(to_storage(once) == once);
    CHECK(to_compute(x) == x);
  }
}

TEST_CASE("PPM header and rounding rule") {
  Image black(1, 1);
  const auto bytes = encode_ppm(black);
  const std::string expected = "P6\n1 1\n255\n";
  REQUIRE(bytes.size() == expected.size() + 3);
  CHECK(std::string(bytes.begin(), bytes.begin() + expected.size()) == expected);
  CHECK(bytes[expected.size()] == 0);
  CHECK(decode_ppm(bytes) == black);

  Image odd(1, 1, {255.4, -3.0, 127.5});
  const auto stored = encode_ppm(odd);
  CHECK(stored[expected.size()] == 255);
  CHECK(stored[expected.size() + 1] == 0);
  CHECK(stored[expected.size() + 2] == 128);
}

TEST_CASE("PPM round trip is exact for storage-domain images") {
  test::TempDir dir;
  Image gradient(2, 2);
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) gradient.at(k, r, c) = 40 * k + 100 * r + 50 * c;
  write_ppm(gradient, dir / "g.ppm");
  CHECK(read_ppm(dir / "g.ppm") == gradient);

  std::mt19937_64 gen(3);
  for (int i = 0; i < 100; ++i) {
    const int h = 1 + static_cast<int>(gen() % 9);
    const int w = 1 + static_cast<int>(gen() % 9);
    const Image x = test::random_storage_image(gen, h, w);
    REQUIRE(decode_ppm(encode_ppm(x)) == x);
  }
}

TEST_CASE("PPM header comments are skipped") {
  const std::string text = "P6\n# made by hand\n1 1\n255\n";
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  bytes.insert(bytes.end(), {1, 2, 3});
  const Image image = decode_ppm(bytes);
  CHECK(image.at(0, 0, 0) == 1);
  CHECK(image.at(2, 0, 0) == 3);
}

TEST_CASE("PPM rejects bad magic, maxval and truncated payloads") {
  auto make = [](const std::string& header, std::size_t payload) {
    std::vector<std::uint8_t> b(header.begin(), header.end());
    b.resize(b.size() + payload, 7);
    return b;
  };
  CHECK_THROWS_AS(decode_ppm(make("P3\n1 1\n255\n", 3)), FormatError);
  CHECK_THROWS_AS(decode_ppm(make("P6\n1 1\n65535\n", 6)), FormatError);
  CHECK_THROWS_AS(decode_ppm(make("P6\n2 2\n255\n", 11)), FormatError);
  CHECK_THROWS_AS(decode_ppm(make("P6\n2\n", 0)), FormatError);
}

TEST_CASE("PPM directory listing is sorted by name") {
  test::TempDir dir;
  write_ppm(Image(1, 1, {3, 3, 3}), dir / "b.ppm");
  write_ppm(Image(1, 1, {1, 1, 1}), dir / "a.ppm");
  write_file_bytes(dir / "notes.txt", std::vector<std::uint8_t>{1});
  const auto files = read_ppm_directory(dir.path());
  REQUIRE(files.size() == 2);
  CHECK(files[0].name == "a.ppm");
  CHECK(files[1].image.at(0, 0, 0) == 3);
}

TEST_CASE("dataset validation") {
  Dataset ds;
  ds.num_classes = 2;
  ds.images = {Image(2, 2), Image(2, 2)};
  ds.labels = {0, 1};
  CHECK_NOTHROW(ds.validate());
  ds.labels = {0, 2};
  CHECK_THROWS_AS(ds.validate(), DataError);
  ds.labels = {0};
  CHECK_THROWS_AS(ds.validate(), DataError);
  ds.labels = {0, 1};
  ds.images[1] = Image(3, 2);
  CHECK_THROWS_AS(ds.validate(), DataError);
  CHECK_THROWS_AS(Image(2, 2, std::vector<double>(5)), DataError);
}
