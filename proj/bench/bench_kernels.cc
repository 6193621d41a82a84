// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include "late/oracle.h"
#include "late/simulation.h"

namespace {

late::SimulationConfig bench_config(bool covariate) {
  late::SimulationConfig cfg;
  cfg.n = 400;
  cfg.with_covariate = covariate;
  cfg.num_datasets = 1;
  cfg.reps = 2000;
  return cfg;
}

void BM_ReplicationsSerial(benchmark::State& state) {
  const auto cfg = bench_config(state.range(0) != 0);
  const auto pop = late::generate_population(cfg, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(late::run_replications_serial(pop, cfg, 0, 0.0));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cfg.reps));
}

void BM_ReplicationsParallel(benchmark::State& state) {
  const auto cfg = bench_config(state.range(0) != 0);
  const auto pop = late::generate_population(cfg, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(late::run_replications(pop, cfg, 0, 0.0));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cfg.reps));
}

late::PotentialPopulation enumeration_population() {
  late::SimulationConfig cfg;
  cfg.n = 16;
  cfg.dbar0 = 0.2;
  cfg.dbar1 = 0.8;
  cfg.with_covariate = true;
  return late::generate_population(cfg, 3);
}

void BM_EnumerationSerial(benchmark::State& state) {
  const auto pop = enumeration_population();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        late::enumerate_assignments_serial(pop, 8, late::EnumeratedEstimator::kLate));
  }
}

void BM_EnumerationParallel(benchmark::State& state) {
  const auto pop = enumeration_population();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        late::enumerate_assignments(pop, 8, late::EnumeratedEstimator::kLate));
  }
}

}  // namespace

BENCHMARK(BM_ReplicationsSerial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicationsParallel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnumerationSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnumerationParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
