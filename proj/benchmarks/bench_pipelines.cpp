#include <benchmark/benchmark.h>

#include "tte/oracle.hpp"
#include "tte/simgen.hpp"

namespace {

const std::vector<double> kHorizons{1, 2, 3, 4, 5};

void BM_GenerateCohort(benchmark::State& state) {
  const tte::ScenarioParams p = tte::builtin_scenario(1);
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(tte::generate_cohort(p, static_cast<std::size_t>(state.range(0)), seed++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenerateCohort)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_Method(benchmark::State& state) {
  const auto method = static_cast<tte::Method>(state.range(0));
  const tte::Cohort cohort = tte::generate_cohort(tte::builtin_scenario(1), 1000, 7).cohort;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tte::run_method(method, cohort, tte::ModelFamily::kAalen, kHorizons));
  }
  state.SetLabel(tte::method_name(method));
}
BENCHMARK(BM_Method)
    ->Arg(static_cast<int>(tte::Method::kMsmIptw))
    ->Arg(static_cast<int>(tte::Method::kMsmIptwL0))
    ->Arg(static_cast<int>(tte::Method::kSequential))
    ->Unit(benchmark::kMillisecond);

void BM_OracleEquivalence(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const tte::oracle::TreeCounts c = tte::oracle::random_lattice(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tte::oracle::np_msm_surv2(c, 1));
    benchmark::DoNotOptimize(tte::oracle::np_seq_surv2(c, 1));
  }
}
BENCHMARK(BM_OracleEquivalence);

}  // namespace
BENCHMARK_MAIN();
