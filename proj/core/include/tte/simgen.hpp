#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tte/cohort.hpp"
#include "tte/estimators.hpp"

namespace tte {

// Data-generating mechanism: frailty U, covariate process L_k, absorbing
// treatment A_k and a conditional additive hazard on each visit interval.
struct ScenarioParams {
  std::string name = "custom";
  double delta_0 = 0.0;
  double delta_L = 0.8;
  double delta_A = -1.0;
  double delta_T = 0.1;
  double gamma_0 = -1.0;
  double gamma_A = 0.0;  // inert: treatment is absorbing
  double gamma_L = 0.5;
  double alpha_0 = 0.2;
  double alpha_A = -0.04;
  double alpha_L = 0.015;
  double alpha_U = 0.015;
  double u_variance = 0.1;  // U ~ N(0, u_variance)
  int n_visits = 5;
  double tau_max = 5.0;
  // Optional trial-dependent effect: alpha_A is multiplied by
  // late_effect_factor for subjects initiating at visit >= late_effect_visit.
  int late_effect_visit = -1;
  double late_effect_factor = 1.0;

  void validate() const;
};

// Scenarios 1-3 of the simulation study.
ScenarioParams builtin_scenario(int id);
ScenarioParams scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioParams& params);
ScenarioParams load_scenario(const std::filesystem::path& file);

struct GeneratedCohort {
  Cohort cohort;
  std::size_t n_clamped = 0;           // person-intervals with a negative hazard set to 0
  std::size_t n_person_intervals = 0;
};

GeneratedCohort generate_cohort(const ScenarioParams& params, std::size_t n, std::uint64_t seed);

struct TruthCurves {
  std::vector<double> horizons;
  std::vector<double> s1;
  std::vector<double> s0;
  std::vector<double> rd;
};

// Large randomized-trial emulation: the same subjects (common random numbers)
// are followed under always-treated and never-treated; truth is the
// Kaplan-Meier curve of each arm.
TruthCurves generate_truth(const ScenarioParams& params, std::size_t n_large, const std::vector<double>& horizons,
                           std::uint64_t seed, int threads = 1);

enum class Method { kMsmIptw, kMsmIptwL0, kSequential };
const char* method_name(Method m);
Method method_from_name(const std::string& name);

// Model and weight specifications used for a method on simulated cohorts.
MsmSpec method_msm_spec(Method m, ModelFamily family, const std::vector<double>& horizons);
WeightModelSpec method_weight_spec(Method m, const Cohort& cohort);
PipelineRun run_method(Method m, const Cohort& cohort, ModelFamily family, const std::vector<double>& horizons,
                       std::optional<double> truncation_percentile = std::nullopt);

struct ScenarioOptions {
  std::size_t n = 1000;
  int reps = 1000;
  std::uint64_t seed = 1;  // repetition r uses seed + r
  int threads = 1;
  std::vector<Method> methods{Method::kMsmIptw, Method::kMsmIptwL0, Method::kSequential};
  ModelFamily family = ModelFamily::kAalen;
  std::optional<double> truncation_percentile;
  std::vector<double> horizons{1, 2, 3, 4, 5};
  std::optional<TruthCurves> truth;  // computed when absent
  std::size_t n_truth = 1000000;
  std::uint64_t truth_seed = 20240101;
};

struct QuantitySummary {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> bias;
  std::vector<double> mc_se;  // sd / sqrt(successful reps)
};

struct MethodPerformance {
  Method method = Method::kSequential;
  QuantitySummary s1;
  QuantitySummary s0;
  QuantitySummary rd;
  std::vector<double> var_ratio;  // Var(this)/Var(sequential) for RD; empty for sequential
  int n_failed = 0;
  // Per successful repetition (in repetition order).
  std::vector<int> reps;
  std::vector<std::vector<double>> rd_estimates;
  std::vector<std::vector<double>> s1_estimates;
  std::vector<std::vector<double>> s0_estimates;
  std::vector<std::vector<double>> max_weight;  // per interval (trial time for sequential)
  std::vector<std::vector<IntervalDiagnostic>> diagnostics;
};

// Mean counts per repetition at each visit (MSM-IPTW) or trial time (sequential).
struct RowCounts {
  std::vector<double> observed;
  std::vector<double> always_treated;
  std::vector<double> never_treated;
};

struct PerformanceTable {
  ScenarioParams params;
  std::size_t n = 0;
  int reps = 0;
  std::uint64_t seed = 0;
  std::vector<double> horizons;
  TruthCurves truth;
  std::vector<MethodPerformance> methods;
  RowCounts msm_rows;
  RowCounts trial_rows;
  double fraction_a0_treated = 0.0;
  double fraction_events = 0.0;
  std::size_t n_clamped = 0;
  std::size_t n_person_intervals = 0;

  const MethodPerformance& method(Method m) const;
};

PerformanceTable run_scenario(const ScenarioParams& params, const ScenarioOptions& options);

}  // namespace tte
