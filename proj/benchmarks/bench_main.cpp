#include <benchmark/benchmark.h>

#include <memory>

#include "sutrack/process.hpp"
#include "sutrack/quantizer.hpp"
#include "sutrack/rng.hpp"
#include "sutrack/tracking.hpp"

using namespace sutrack;

static void CodebookBuild(benchmark::State& state) {
  const int bits = static_cast<int>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto cb = ShapeCodebook::build(8, bits, seed++, 256);
    benchmark::DoNotOptimize(cb.scale());
  }
  state.SetComplexityN(1 << bits);
}
BENCHMARK(CodebookBuild)->DenseRange(6, 14, 2)->Complexity();

static void ShapeEncode(benchmark::State& state) {
  const int bits = static_cast<int>(state.range(0));
  const auto cb = ShapeCodebook::build(16, bits, 3, 64);
  Rng rng(5);
  const Eigen::VectorXd y = rng.unit_vector(16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cb.encode(y));
  }
  state.SetComplexityN(1 << bits);
}
BENCHMARK(ShapeEncode)->DenseRange(6, 14, 2)->Complexity();

static void GainShapeQuantize(benchmark::State& state) {
  const auto cb = ShapeCodebook::build(8, 12, 3, 64);
  const GainShapeQuantizer q(cb, 8.0, 4);
  Rng rng(5);
  const Eigen::VectorXd y = 2.5 * rng.unit_vector(8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(q.quantize(y).reconstruction.sum());
  }
}
BENCHMARK(GainShapeQuantize);

static void TrackingSlots(benchmark::State& state) {
  TrackingConfig cfg;
  cfg.rate = 2.0;
  cfg.s = 2;
  cfg.p = 1;
  cfg.horizon = static_cast<int>(state.range(0));
  cfg.n = 8;
  cfg.alpha = 0.9;
  cfg.sigma2 = 1.0;
  cfg.quantizer.gain_bits = 4;
  ProcessParams params;
  params.alpha = cfg.alpha;
  params.n = cfg.n;
  const Trajectory traj = generate(params, cfg.horizon, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_tracking(traj, cfg, 2).dbar);
  }
  state.SetItemsProcessed(state.iterations() * cfg.horizon);
}
BENCHMARK(TrackingSlots)->Arg(256)->Arg(1024)->Arg(4096);

static void ProfileQuantizer(benchmark::State& state) {
  const auto cb = ShapeCodebook::build(8, 12, 3, 64);
  const GainShapeQuantizer q(cb, 8.0, 4);
  const auto grid = midcell_norm_grid(8, 8.0, 4, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(profile_quantizer(q, 8.0, grid, 100, 7).theta_hat);
  }
}
BENCHMARK(ProfileQuantizer);

BENCHMARK_MAIN();
