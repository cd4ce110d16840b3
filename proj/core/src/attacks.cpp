#include "ccp/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ccp/errors.hpp"

namespace ccp {
namespace {

constexpr int kTupleSize = 5;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double snap(double v, const std::vector<double>& levels) {
  v = std::clamp(v, 0.0, 255.0);
  if (levels.empty()) return std::round(v);
  double best = levels.front();
  for (double level : levels) {
    if (std::abs(level - v) < std::abs(best - v)) best = level;
  }
  return best;
}

int to_index(double v, int size) {
  return std::clamp(static_cast<int>(std::round(v)), 0, size - 1);
}

struct Bounds {
  std::vector<double> lo;
  std::vector<double> hi;
};

Bounds candidate_bounds(const Image& image, int budget) {
  Bounds b;
  for (int p = 0; p < budget; ++p) {
    const double row_hi = image.height() - 0.5;
    const double col_hi = image.width() - 0.5;
    b.lo.insert(b.lo.end(), {-0.5, -0.5, 0.0, 0.0, 0.0});
    b.hi.insert(b.hi.end(), {row_hi, col_hi, 255.0, 255.0, 255.0});
  }
  return b;
}

}  // namespace

Image fgsm_attack(const Model& model, const Image& image, int label, const FgsmParams& params) {
  if (!(params.epsilon >= 0.0) || !std::isfinite(params.epsilon)) {
    throw DataError("FGSM epsilon must be finite and non-negative");
  }
  if (label < 0 || label >= model.num_classes()) {
    throw DataError("FGSM label " + std::to_string(label) + " out of range");
  }
  const std::vector<double> grad = input_gradient(model, image, label);
  Image out = image;
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = to_storage_value(data[i] + params.epsilon * sign(grad[i]));
  }
  return out;
}

void OnePixelParams::validate() const {
  if (pixel_budget < 1) throw DataError("one-pixel budget must be at least 1");
  if (population < 4) throw DataError("differential evolution needs a population of at least 4");
  if (iterations < 0) throw DataError("iterations must be non-negative");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
    throw DataError("crossover rate must lie in [0, 1]");
  }
  if (!std::isfinite(differential_weight)) throw DataError("differential weight must be finite");
}

Image apply_candidate(const Image& image, const Candidate& candidate,
                      const OnePixelParams& params) {
  Image out = image;
  for (std::size_t p = 0; p + kTupleSize <= candidate.size(); p += kTupleSize) {
    const int row = to_index(candidate[p], image.height());
    const int col = to_index(candidate[p + 1], image.width());
    for (int k = 0; k < kChannels; ++k) {
      out.at(k, row, col) = snap(candidate[p + 2 + k], params.intensity_levels);
    }
  }
  return out;
}

OnePixelResult one_pixel_search(const Model& model, const Image& image, int label,
                                const OnePixelParams& params, const SeedPath& seed) {
  params.validate();
  if (label < 0 || label >= model.num_classes()) {
    throw DataError("one-pixel label " + std::to_string(label) + " out of range");
  }
  SeedPath path = seed;
  path.purpose = Purpose::AttackSearch;
  Rng rng = Rng::derive(path);

  const auto pop_size = static_cast<std::size_t>(params.population);
  const std::size_t dims = static_cast<std::size_t>(params.pixel_budget) * kTupleSize;
  const Bounds bounds = candidate_bounds(image, params.pixel_budget);

  auto fitness_of = [&](const std::vector<Candidate>& candidates) {
    std::vector<Image> images;
    images.reserve(candidates.size());
    for (const auto& c : candidates) images.push_back(apply_candidate(image, c, params));
    const ProbMatrix probs = forward(model, images);
    std::vector<double> f(candidates.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = probs.row(i)[label];
    return f;
  };

  std::vector<Candidate> population(pop_size, Candidate(dims));
  for (auto& c : population) {
    for (std::size_t d = 0; d < dims; ++d) c[d] = rng.uniform_in(bounds.lo[d], bounds.hi[d]);
  }
  std::vector<double> fitness = fitness_of(population);

  std::vector<Candidate> trials(pop_size, Candidate(dims));
  for (int gen = 0; gen < params.iterations; ++gen) {
    for (std::size_t i = 0; i < pop_size; ++i) {
      std::size_t a, b, c;
      do a = rng.below(pop_size); while (a == i);
      do b = rng.below(pop_size); while (b == i || b == a);
      do c = rng.below(pop_size); while (c == i || c == a || c == b);
      const std::size_t forced = rng.below(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        const bool cross = rng.next_uniform() < params.crossover_rate || d == forced;
        double v = population[i][d];
        if (cross) {
          v = population[a][d] +
              params.differential_weight * (population[b][d] - population[c][d]);
          v = std::clamp(v, bounds.lo[d], bounds.hi[d]);
        }
        trials[i][d] = v;
      }
    }
    const std::vector<double> trial_fitness = fitness_of(trials);
    for (std::size_t i = 0; i < pop_size; ++i) {
      if (trial_fitness[i] <= fitness[i]) {
        population[i] = trials[i];
        fitness[i] = trial_fitness[i];
      }
    }
  }

  const auto best = static_cast<std::size_t>(
      std::distance(fitness.begin(), std::min_element(fitness.begin(), fitness.end())));
  return {apply_candidate(image, population[best], params), population[best], fitness[best]};
}

Image one_pixel_attack(const Model& model, const Image& image, int label,
                       const OnePixelParams& params, const SeedPath& seed) {
  return one_pixel_search(model, image, label, params, seed).image;
}

}  // namespace ccp
