#include <benchmark/benchmark.h>

#include <random>

#include "loopdyn/calibration.hpp"
#include "loopdyn/clustering.hpp"
#include "loopdyn/dynamics.hpp"
#include "loopdyn/synthgen.hpp"

using namespace loopdyn;

namespace {

std::vector<Embedding> synthetic(RegimeLabel regime, std::size_t dim, std::size_t horizon) {
  SynthSpec spec;
  spec.regime = regime;
  spec.dim = dim;
  spec.horizon = horizon;
  spec.seed = 1;
  return generate(spec).embeddings();
}

void BM_DetectClusters(benchmark::State& state) {
  const auto regime = static_cast<RegimeLabel>(state.range(0));
  const auto traj = synthetic(regime, 256, static_cast<std::size_t>(state.range(1)));
  const ClusterParams p;
  for (auto _ : state) benchmark::DoNotOptimize(detect_clusters(traj, p, Similarity{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(traj.size()));
}
BENCHMARK(BM_DetectClusters)
    ->ArgNames({"regime", "T"})
    ->ArgsProduct({{0, 1, 2}, {50, 500}});

void BM_ClassifyRegime(benchmark::State& state) {
  const auto traj = synthetic(RegimeLabel::Oscillatory, 256, 50);
  const ClusterParams p;
  const auto clusters = detect_clusters(traj, p, Similarity{});
  for (auto _ : state) benchmark::DoNotOptimize(classify_regime(traj, clusters, Similarity{}, p));
}
BENCHMARK(BM_ClassifyRegime);

void BM_FitIsotonic(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CalibrationPair> pairs(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pairs) {
    p.raw = 2.0 * u(rng) - 1.0;
    p.target = std::clamp(0.5 * (p.raw + 1.0) + 0.2 * (u(rng) - 0.5), 0.0, 1.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_isotonic(pairs));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitIsotonic)->RangeMultiplier(8)->Range(64, 32768)->Complexity();

void BM_Dispersion(benchmark::State& state) {
  const auto traj = synthetic(RegimeLabel::Contractive, static_cast<std::size_t>(state.range(0)), 50);
  for (auto _ : state) benchmark::DoNotOptimize(dispersion(traj, Similarity{}));
}
BENCHMARK(BM_Dispersion)->Arg(64)->Arg(256)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
