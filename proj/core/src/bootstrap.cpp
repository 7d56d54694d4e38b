#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "tte/errors.hpp"
#include "tte/estimators.hpp"

namespace tte {
namespace {

Cohort resample(const Cohort& cohort, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, cohort.size() - 1);
  std::vector<SubjectHistory> subjects;
  subjects.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    SubjectHistory s = cohort.subjects[pick(rng)];
    s.id = std::to_string(i);
    subjects.push_back(std::move(s));
  }
  return make_cohort(std::move(subjects), cohort.covariate_names, cohort.tau_max);
}

PipelineRun run_pipeline(Pipeline pipeline, const Cohort& cohort, const MsmSpec& msm, const WeightModelSpec& weights,
                         const PipelineOptions& options) {
  return pipeline == Pipeline::kMsmIptw ? run_msm_iptw(cohort, msm, weights, options)
                                        : run_sequential_trials(cohort, msm, weights, options);
}

}  // namespace

double type7_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw UsageError("quantile of an empty set");
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("quantile probability must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

MarginalResults bootstrap_ci(const Cohort& cohort, Pipeline pipeline, const MsmSpec& msm,
                             const WeightModelSpec& weights, const PipelineOptions& options,
                             const BootstrapOptions& bootstrap) {
  if (bootstrap.replicates < 2) throw UsageError("bootstrap needs at least 2 replicates");
  if (!(bootstrap.level > 0.0 && bootstrap.level < 1.0)) throw UsageError("bootstrap level must lie in (0, 1)");
  MarginalResults point = run_pipeline(pipeline, cohort, msm, weights, options).results;

  MsmSpec replicate_spec = msm;
  replicate_spec.horizons.clear();
  for (double t : point.tau) {
    if (t > 0.0) replicate_spec.horizons.push_back(t);
  }
  replicate_spec.include_jump_times = false;

  const auto b_total = static_cast<std::size_t>(bootstrap.replicates);
  std::vector<std::vector<double>> rd(b_total);
  std::vector<char> failed(b_total, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t b = next++; b < b_total; b = next++) {
      std::mt19937_64 rng(bootstrap.seed + b);
      try {
        const Cohort sample = resample(cohort, rng);
        const auto res = run_pipeline(pipeline, sample, replicate_spec, weights, options).results;
        rd[b].resize(point.tau.size());
        for (std::size_t i = 0; i < point.tau.size(); ++i) rd[b][i] = res.rd_at(point.tau[i]);
      } catch (const Error&) {
        failed[b] = 1;
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(bootstrap.threads, bootstrap.replicates));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  const auto n_failed = static_cast<int>(std::count(failed.begin(), failed.end(), 1));
  if (n_failed * 5 > bootstrap.replicates) {
    throw FitError("bootstrap: " + std::to_string(n_failed) + " of " + std::to_string(bootstrap.replicates) +
                   " replicates failed");
  }
  point.n_bootstrap = bootstrap.replicates - n_failed;
  point.n_bootstrap_failed = n_failed;
  const double alpha = (1.0 - bootstrap.level) / 2.0;
  point.rd_lo.resize(point.tau.size());
  point.rd_hi.resize(point.tau.size());
  for (std::size_t i = 0; i < point.tau.size(); ++i) {
    std::vector<double> values;
    for (std::size_t b = 0; b < b_total; ++b) {
      if (!failed[b]) values.push_back(rd[b][i]);
    }
    point.rd_lo[i] = type7_quantile(values, alpha);
    point.rd_hi[i] = type7_quantile(values, 1.0 - alpha);
  }
  return point;
}

}  // namespace tte
