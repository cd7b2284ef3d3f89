// Serial reference vs OpenMP for the data-parallel kernels.
#include <benchmark/benchmark.h>

#include "smartcea/analysis.hpp"
#include "smartcea/bootstrap.hpp"
#include "smartcea/dgp.hpp"
#include "smartcea/study.hpp"

using namespace smartcea;

namespace {

Execution exec_of(const benchmark::State& state) {
  return state.range(0) ? Execution::Parallel : Execution::Serial;
}

void BM_Simulate(benchmark::State& state) {
  DgpConfig cfg;
  cfg.n = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_smart(cfg, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Simulate)->ArgsProduct({{0, 1}, {1809, 200000}})->Unit(benchmark::kMillisecond);

void BM_Truth(benchmark::State& state) {
  DgpConfig cfg;
  const auto regimes = cfg.index_map.numbered_regimes();
  for (auto _ : state) benchmark::DoNotOptimize(true_values(cfg, regimes, 1, 200000, 1, exec_of(state)));
}
BENCHMARK(BM_Truth)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& state) {
  DgpConfig cfg;
  const Dataset data = simulate_smart(cfg);
  AnalysisSpec spec;
  const auto r = cfg.index_map.numbered_regimes();
  spec.regimes = {r[0], r[1]};
  const Statistic stat = icer_statistic(spec, 2);
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_ci(data, stat, 100, 3, 0.05, exec_of(state)));
}
BENCHMARK(BM_Bootstrap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Study(benchmark::State& state) {
  StudyConfig cfg;
  cfg.reps = 16;
  const auto regimes = cfg.dgp.index_map.numbered_regimes();
  cfg.truth = true_values(cfg.dgp, regimes, 1, 100000, 1);
  for (auto _ : state) benchmark::DoNotOptimize(run_study(cfg, exec_of(state)));
}
BENCHMARK(BM_Study)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
