#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tte/cohort.hpp"
#include "tte/survfit.hpp"
#include "tte/trials.hpp"
#include "tte/weights.hpp"

namespace tte {

enum class ModelFamily { kCox, kAalen };

// g(treatment history): current level a_k, duration sum_j a_j, or one column
// per visit index j holding a_j (zero before visit j exists).
enum class TreatmentForm { kCurrent, kDuration, kPerVisit };

struct MsmSpec {
  ModelFamily family = ModelFamily::kAalen;
  TreatmentForm form = TreatmentForm::kPerVisit;
  int n_visits = 0;                              // per-visit columns; 0 = cohort.max_visits()
  std::vector<std::size_t> baseline_covariates;  // conditioning set (covariate indices)
  bool treatment_by_baseline = false;            // add treatment x baseline interactions
  std::vector<double> horizons;                  // empty = 1, 2, ..., floor(tau_max)
  SurvivalTransform transform = SurvivalTransform::kExponential;
  bool include_jump_times = false;               // also report every jump up to the last horizon
};

// Column layout of a fitted MSM; shared by fitting and standardization.
struct MsmDesign {
  bool trial_timescale = false;  // sequential trials: treatment = initiator indicator
  TreatmentForm form = TreatmentForm::kPerVisit;
  int n_visits = 0;
  std::vector<std::size_t> baseline_covariates;
  bool interaction = false;
  int n_trial_columns = 0;  // stratified Aalen: one baseline column per trial, no intercept

  std::size_t width() const;
  std::vector<std::string> column_names(const std::vector<std::string>& covariate_names) const;
  // Design row on interval k given the treatment history a_0..a_k (for the
  // trial timescale only a_0, the initiator flag, is used) and the full
  // baseline covariate vector.
  std::vector<double> encode(const std::vector<int>& history, int k, const std::vector<double>& baseline,
                             int trial = 0) const;
  CovariatePath regime_path(int a, const std::vector<double>& baseline, int n_intervals, int trial = 0) const;
};

struct HazardFit {
  ModelFamily family = ModelFamily::kAalen;
  CoxFit cox;
  AalenFit aalen;
  MsmDesign design;
  int reference_stratum = 0;  // baseline used for standardization
};

struct MarginalResults {
  std::vector<double> tau;
  std::vector<double> s1;
  std::vector<double> s0;
  std::vector<double> rd;
  std::vector<double> rd_lo;  // empty unless bootstrapped
  std::vector<double> rd_hi;
  std::string population;
  std::size_t population_size = 0;
  std::size_t n_clamped = 0;
  std::size_t n_increases = 0;
  bool extrapolated = false;
  int n_bootstrap = 0;
  int n_bootstrap_failed = 0;

  double s1_at(double t) const;
  double s0_at(double t) const;
  double rd_at(double t) const;
};

struct PipelineOptions {
  std::optional<double> truncation_percentile;  // applied to the final weights
  int max_trial = -1;                           // sequential: last trial start (-1 = all)
  bool stratified_baseline = false;             // sequential: baseline hazard per trial
  int reference_trial = 0;                      // baseline used when stratified
  // Standardization population (full covariate vectors); default C0, the
  // covariates at visit 0 of every subject.
  std::optional<std::vector<std::vector<double>>> population;
};

struct PipelineRun {
  MarginalResults results;
  WeightSeries weights;
  HazardFit fit;
  std::size_t n_rows = 0;
};

// Averages the conditional survival of the always/never treated copies of
// every member of the population.
MarginalResults standardize(const HazardFit& fit, const MsmSpec& spec,
                            const std::vector<std::vector<double>>& population,
                            const std::vector<double>& horizons);

PipelineRun run_msm_iptw(const Cohort& cohort, const MsmSpec& msm, const WeightModelSpec& weights,
                         const PipelineOptions& options = {});

PipelineRun run_sequential_trials(const Cohort& cohort, const MsmSpec& msm, const WeightModelSpec& weights,
                                  const PipelineOptions& options = {});

struct HomogeneityResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::vector<int> trials;  // trials entering the test; the first is the reference
};

// Wald test of trial x treatment interactions in a trial-stratified weighted
// Cox model with subject-clustered sandwich variance. Uses TrialRow::weight.
HomogeneityResult test_trial_homogeneity(const std::vector<TrialRow>& rows);
HomogeneityResult test_trial_homogeneity(std::vector<TrialRow> rows, const WeightSeries& weights);

enum class Pipeline { kMsmIptw, kSequential };

struct BootstrapOptions {
  int replicates = 200;
  std::uint64_t seed = 0;
  int threads = 1;
  double level = 0.95;
};

// Percentile intervals for RD from subject-level resampling with every step of
// the pipeline refitted per replicate.
MarginalResults bootstrap_ci(const Cohort& cohort, Pipeline pipeline, const MsmSpec& msm,
                             const WeightModelSpec& weights, const PipelineOptions& options,
                             const BootstrapOptions& bootstrap);

// Sample quantile by linear interpolation between order statistics.
double type7_quantile(std::vector<double> values, double p);

}  // namespace tte
