// OpenMP kernels against their serial references.
#include <benchmark/benchmark.h>

#include <random>

#include "pspline/basis.hpp"
#include "pspline/sim.hpp"

using namespace pspline;

namespace {

std::vector<double> random_points(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> xs(n);
  for (double& x : xs) x = unif(rng);
  return xs;
}

void BM_DesignSerial(benchmark::State& state) {
  const BSplineBasis basis = make_basis(4, 40);
  const auto xs = random_points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(design_matrix_serial(basis, xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DesignParallel(benchmark::State& state) {
  const BSplineBasis basis = make_basis(4, 40);
  const auto xs = random_points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(design_matrix(basis, xs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

sim::StudyConfig study() {
  sim::StudyConfig cfg;
  cfg.scenarios = {sim::Scenario{sim::TestFunction::f1, sim::ErrorDist::mixture}};
  cfg.reps = 16;
  return cfg;
}

void BM_StudySerial(benchmark::State& state) {
  const auto cfg = study();
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_study_serial(cfg));
}

void BM_StudyParallel(benchmark::State& state) {
  const auto cfg = study();
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_study(cfg, static_cast<int>(state.range(0))));
}

}  // namespace

BENCHMARK(BM_DesignSerial)->Arg(10000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DesignParallel)->Arg(10000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StudySerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_StudyParallel)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_MAIN();
