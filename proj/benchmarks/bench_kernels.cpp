#include <benchmark/benchmark.h>

#include <random>

#include "tte/glm.hpp"
#include "tte/survfit.hpp"

namespace {

struct LogisticData {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
};

LogisticData logistic_data(Eigen::Index n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  LogisticData d{Eigen::MatrixXd(n, 3), Eigen::VectorXd(n), Eigen::VectorXd::Ones(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    d.x.row(i) << 1.0, z(rng), z(rng);
    const double eta = -1.0 + 0.5 * d.x(i, 1) - 0.3 * d.x(i, 2);
    d.y[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  return d;
}

std::vector<tte::IntervalRow> survival_rows(std::size_t n) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  std::exponential_distribution<double> e(1.0);
  std::vector<tte::IntervalRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    tte::IntervalRow r;
    r.subject = i;
    const double a = static_cast<double>(i % 2), l = z(rng);
    const double t = e(rng) / (0.2 + 0.05 * a + 0.05 * std::abs(l));
    r.t_out = std::min(t, 5.0);
    r.event = t < 5.0;
    r.x = {a, l};
    rows.push_back(std::move(r));
  }
  return rows;
}

void BM_Logistic(benchmark::State& state) {
  const LogisticData d = logistic_data(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(tte::fit_weighted_logistic(d.x, d.y, d.w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Logistic)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Cox(benchmark::State& state) {
  const auto rows = survival_rows(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tte::fit_weighted_cox(rows));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Cox)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_Aalen(benchmark::State& state) {
  const auto rows = survival_rows(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tte::fit_weighted_aalen(rows));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Aalen)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_KaplanMeier(benchmark::State& state) {
  const auto rows = survival_rows(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tte::kaplan_meier(rows));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KaplanMeier)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
