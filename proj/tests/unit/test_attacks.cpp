#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ccp/attacks.hpp"
#include "ccp/errors.hpp"
#include "ccp/model.hpp"
#include "support.hpp"

using namespace ccp;

namespace {

int changed_pixels(const Image& a, const Image& b) {
  int count = 0;
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      bool diff = false;
      for (int k = 0; k < 3; ++k) diff = diff || a.at(k, r, c) != b.at(k, r, c);
      count += diff ? 1 : 0;
    }
  }
  return count;
}

Model tiny_model(int side, std::uint64_t seed) {
  return Model::init({side, side, {Conv2D{3}, ReLU{}, Flatten{}, Dense{3}, Softmax{}}}, seed);
}

}  // namespace

TEST_CASE("FGSM with zero epsilon is the identity on storage images") {
  std::mt19937_64 gen(1);
  const Model model = tiny_model(5, 2);
  for (int i = 0; i < 10; ++i) {
    const Image x = test::random_storage_image(gen, 5, 5);
    CHECK(fgsm_attack(model, x, i % 3, {.epsilon = 0.0}) == x);
  }
}

TEST_CASE("FGSM stays within epsilon and in the storage domain") {
  std::mt19937_64 gen(2);
  const Model model = tiny_model(6, 3);
  for (double eps : {1.0, 4.0, 8.0, 16.0}) {
    for (int i = 0; i < 10; ++i) {
      const Image x = test::random_storage_image(gen, 6, 6);
      const Image adv = fgsm_attack(model, x, i % 3, {.epsilon = eps});
      CHECK(is_storage_domain(adv));
      for (std::size_t j = 0; j < x.size(); ++j) CHECK(std::abs(adv.data()[j] - x.data()[j]) <= eps);
    }
  }
}

TEST_CASE("FGSM sign by hand") {
  Model model({1, 1, {Flatten{}, Dense{2}, Softmax{}}});
  const auto& dense = model.layers()[1];
  const double w[6] = {1, -1, 0.5, -1, 2, 0.5};
  for (int i = 0; i < 6; ++i) model.parameters()[dense.weight_offset + i] = w[i];
  const Image x(1, 1, {100, 100, 100});
  const Image adv = fgsm_attack(model, x, 0, {.epsilon = 8.0});
  CHECK(adv.data()[0] == 92.0);
  CHECK(adv.data()[1] == 108.0);
  CHECK(adv.data()[2] == 100.0);
}

TEST_CASE("apply_candidate clamps and rounds") {
  const Image x(3, 3, std::vector<double>(27, 10.0));
  const Image out = apply_candidate(x, {-5.0, 100.0, 300.0, -20.0, 127.5}, {});
  CHECK(out.at(0, 0, 2) == 255.0);
  CHECK(out.at(1, 0, 2) == 0.0);
  CHECK(out.at(2, 0, 2) == 128.0);
  CHECK(changed_pixels(x, out) == 1);

  OnePixelParams levels;
  levels.intensity_levels = {0.0, 255.0};
  const Image snapped = apply_candidate(x, {1.0, 1.0, 100.0, 200.0, 127.0}, levels);
  CHECK(snapped.at(0, 1, 1) == 0.0);
  CHECK(snapped.at(1, 1, 1) == 255.0);
  CHECK(snapped.at(2, 1, 1) == 0.0);
}

TEST_CASE("one-pixel parameters are validated") {
  const Model model = tiny_model(4, 1);
  const Image x(4, 4);
  CHECK_THROWS_AS(one_pixel_search(model, x, 0, {.population = 3}, {}), DataError);
  CHECK_THROWS_AS(one_pixel_search(model, x, 0, {.pixel_budget = 0}, {}), DataError);
  CHECK_THROWS_AS(one_pixel_search(model, x, 0, {.iterations = -1}, {}), DataError);
}

TEST_CASE("one-pixel search touches at most pixel_budget pixels") {
  std::mt19937_64 gen(3);
  const Model model = tiny_model(6, 4);
  for (int i = 0; i < 5; ++i) {
    const Image x = test::random_storage_image(gen, 6, 6);
    const Image init_only = one_pixel_attack(model, x, 0, {.population = 8, .iterations = 0}, {1, 0, static_cast<std::uint64_t>(i)});
    CHECK(changed_pixels(x, init_only) <= 1);
    CHECK(is_storage_domain(init_only));
    const Image two =
        one_pixel_attack(model, x, 1, {.pixel_budget = 2, .population = 10, .iterations = 5}, {1, 0, static_cast<std::uint64_t>(i)});
    CHECK(changed_pixels(x, two) <= 2);
  }
}

TEST_CASE("one-pixel search is deterministic in its seed") {
  std::mt19937_64 gen(4);
  const Model model = tiny_model(5, 5);
  const Image x = test::random_storage_image(gen, 5, 5);
  const OnePixelParams params{.population = 10, .iterations = 5};
  const auto a = one_pixel_search(model, x, 2, params, {7, 1, 3});
  const auto b = one_pixel_search(model, x, 2, params, {7, 1, 3, Purpose::Shuffle});
  const auto c = one_pixel_search(model, x, 2, params, {7, 2, 3});
  CHECK(a.candidate == b.candidate);
  CHECK(a.image == b.image);
  CHECK_FALSE(a.candidate == c.candidate);
}

TEST_CASE("reported fitness is the true-label probability of the returned image") {
  std::mt19937_64 gen(5);
  const Model model = tiny_model(5, 6);
  const Image x = test::random_storage_image(gen, 5, 5);
  const auto result = one_pixel_search(model, x, 1, {.population = 12, .iterations = 6}, {3});
  CHECK(result.fitness == forward_sample(model, result.image).probabilities()[1]);
  CHECK(result.image == apply_candidate(x, result.candidate, {}));
}

TEST_CASE("on a tiny search space DE finds the exhaustive optimum") {
  std::mt19937_64 gen(6);
  const Model model = tiny_model(2, 7);
  const Image x = test::random_storage_image(gen, 2, 2);
  OnePixelParams params;
  params.intensity_levels = {0.0, 255.0};

  double best = 2.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      for (int m = 0; m < 8; ++m) {
        const Candidate cand{double(r), double(c), 255.0 * (m & 1), 255.0 * ((m >> 1) & 1),
                             255.0 * ((m >> 2) & 1)};
        const Image img = apply_candidate(x, cand, params);
        best = std::min(best, forward_sample(model, img).probabilities()[0]);
      }

  const auto result = one_pixel_search(model, x, 0, params, {11});
  CHECK(result.fitness == best);
}
