#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tte/cohort.hpp"
#include "tte/trials.hpp"

namespace tte {

// Per subject (IPTW, IPCW) or per subject-trial (IPACW) weights on follow-up
// intervals j = 0, 1, ...; numerator/denominator hold the per-visit factors
// (factor j multiplies into weight j; factor 0 of IPACW and IPCW is 1).
struct WeightTrack {
  std::size_t subject = 0;
  int trial = 0;
  int initiator = 0;
  std::vector<double> weight;
  std::vector<double> numerator;
  std::vector<double> denominator;
};

struct WeightSeries {
  std::vector<WeightTrack> tracks;
};

// Design row for the treatment (or censoring) decision at `visit` of a series
// anchored at visit `origin` (0 for IPTW and IPCW, the trial start for IPACW).
using FeatureBuilder = std::function<std::vector<double>(const SubjectHistory&, int origin, int visit)>;

struct WeightModelSpec {
  FeatureBuilder numerator;    // empty: unstabilized weights
  FeatureBuilder denominator;
  bool pooled = true;          // false: separate fit per visit (IPACW: per follow-up time)
  bool absorbing = true;       // treatment never stops once started
};

// Covariate indices default to every covariate of the cohort.
//   numerator: visit-specific intercepts (+ visit-specific baseline slopes when
//   conditional); denominator: intercept + current covariates.
WeightModelSpec iptw_spec(const Cohort& cohort, bool condition_on_baseline,
                          std::vector<std::size_t> covariates = {});
//   numerator: follow-up-specific intercepts and trial-baseline slopes;
//   denominator: intercept + current covariates.
WeightModelSpec ipacw_spec(const Cohort& cohort, std::vector<std::size_t> covariates = {});
//   numerator: visit-specific intercepts; denominator: visit-specific
//   intercepts + previous treatment + previous covariates.
WeightModelSpec ipcw_spec(const Cohort& cohort, std::vector<std::size_t> covariates = {});

WeightSeries compute_iptw(const Cohort& cohort, const WeightModelSpec& spec);
WeightSeries compute_ipacw(const Cohort& cohort, const std::vector<TrialRow>& trial_rows,
                           const WeightModelSpec& spec);
WeightSeries compute_ipcw(const Cohort& cohort, const WeightModelSpec& spec);

// Running products of numerator[j] / denominator[j].
std::vector<double> cumulative_weights(const std::vector<double>& numerator,
                                       const std::vector<double>& denominator);

// Caps weights at the pooled nearest-rank percentile (rank = ceil(p/100 * N)).
WeightSeries truncate_weights(const WeightSeries& series, double percentile);
double nearest_rank_percentile(std::vector<double> values, double percentile);

struct IntervalDiagnostic {
  int interval = 0;
  double max = 0.0;
  double mean = 0.0;
  double p99 = 0.0;
  std::size_t n_rows = 0;
};

std::vector<IntervalDiagnostic> weight_diagnostics(const WeightSeries& series);

}  // namespace tte
