#include <benchmark/benchmark.h>

#include "ccp/attacks.hpp"
#include "ccp/channel_perturbation.hpp"
#include "ccp/model.hpp"
#include "ccp/synthetic.hpp"
#include "ccp/training.hpp"

namespace {

using namespace ccp;

void BM_ApplyCcp(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Dataset ds = generate_dominant_channel(1, side, 1);
  const CcpTrialPlan plan{CcpParams::cifar_profile(), 1, 0};
  const WeightMatrix w = draw_weights(plan, 0);
  for (auto _ : state) benchmark::DoNotOptimize(apply_ccp(ds.images[0], w, plan.params));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_ApplyCcp)->Arg(32)->Arg(224);

void BM_AttackDataset(benchmark::State& state) {
  const Dataset ds = generate_dominant_channel(100, 32, 2);
  const CcpTrialPlan plan{CcpParams::cifar_profile(), 1, 0};
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(attack_dataset(ds, plan, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.size()));
}
BENCHMARK(BM_AttackDataset)->Arg(1)->Arg(4)->UseRealTime();

void BM_Forward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Model model = Model::init(small_cnn(side, 10), 3);
  const Dataset ds = generate_dominant_channel(11, side, 3);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, ds.images));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.size()));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(32);

void BM_TrainEpoch(benchmark::State& state) {
  const Dataset ds = generate_dominant_channel(64, 16, 4);
  TrainConfig config;
  config.epochs = 1;
  config.schedule = constant_schedule(1, 1e-3);
  for (auto _ : state) {
    Model model = Model::init(small_cnn(16, 3), 4);
    benchmark::DoNotOptimize(train(model, ds, config));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.size()));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_OnePixelSearch(benchmark::State& state) {
  const Model model = Model::init(small_cnn(16, 3), 5);
  const Dataset ds = generate_dominant_channel(1, 16, 5);
  const OnePixelParams params{.population = 20, .iterations = 10};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(one_pixel_search(model, ds.images[0], 0, params, {seed++}));
  }
}
BENCHMARK(BM_OnePixelSearch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
