#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <utility>
#include <vector>

#include "tte/cohort.hpp"

namespace tte {

struct CoxOptions {
  double score_tolerance = 1e-8;
  int max_iterations = 50;
  double separation_threshold = 30.0;
  double information_collapse = 1e-6;  // as for LogisticOptions
};

struct BreslowBaseline {
  int stratum = 0;
  std::vector<double> times;       // distinct event times, ascending
  std::vector<double> increments;  // dH0 at each time (covariates at zero)
  std::vector<double> cumulative;  // H0 at each time

  double at(double t) const;  // H0(t), right-continuous step function
};

struct CoxFit {
  Eigen::VectorXd log_hazard_ratios;
  std::vector<BreslowBaseline> baselines;  // one per stratum, ascending stratum id
  Eigen::MatrixXd information;             // observed (weighted) information at the optimum
  bool converged = false;
  int n_iterations = 0;
  double log_partial_likelihood = 0.0;

  const BreslowBaseline& baseline(int stratum = 0) const;
};

struct AalenOptions {
  bool add_intercept = true;  // prepend a column of ones (the baseline)
  double rank_tolerance = 1e-10;
};

struct AalenFit {
  std::vector<double> jump_times;  // event times, ascending
  Eigen::MatrixXd increments;      // one row per jump time, one column per coefficient
  Eigen::MatrixXd cumulative;      // running sums of increments
  bool has_intercept = true;
  std::size_t n_skipped = 0;       // event times with a rank-deficient risk set
  std::vector<double> skipped_times;

  Eigen::Index width() const { return increments.cols(); }
  Eigen::VectorXd cumulative_at(double t) const;  // B(t), with B(0) = 0
};

enum class SurvivalTransform {
  kExponential,   // S = exp(-sum of hazard increments)
  kProductLimit,  // S = prod(1 - hazard increment)
};

struct SurvivalCurve {
  std::vector<double> times;     // ascending, starts at 0
  std::vector<double> survival;  // S at each time (right-continuous steps)
  bool extrapolated = false;     // some horizon lies beyond the last jump
  std::size_t n_clamped = 0;     // values clamped into [0, 1]
  std::size_t n_increases = 0;   // steps where S went up (negative additive increments)

  double at(double t) const;
};

// Covariate vector for each visit interval (k, k+1], k = 0, 1, ...
using CovariatePath = std::vector<std::vector<double>>;

SurvivalCurve kaplan_meier(const std::vector<IntervalRow>& rows);
SurvivalCurve kaplan_meier(const std::vector<double>& times, const std::vector<int>& status);

CoxFit fit_weighted_cox(const std::vector<IntervalRow>& rows, const CoxOptions& options = {});

// Lin-Wei sandwich variance clustered on IntervalRow::subject.
Eigen::MatrixXd cox_robust_variance(const std::vector<IntervalRow>& rows, const CoxFit& fit);

AalenFit fit_weighted_aalen(const std::vector<IntervalRow>& rows, const AalenOptions& options = {});

// The curve is reported at 0, at every requested horizon and, when
// include_jump_times is set, at every jump of the fit up to the last horizon.
SurvivalCurve survival_from_cox(const CoxFit& fit, const CovariatePath& path,
                                const std::vector<double>& horizons, int stratum = 0,
                                SurvivalTransform transform = SurvivalTransform::kExponential,
                                bool include_jump_times = true);

// The path excludes the intercept; it is supplied automatically when the fit
// has one.
SurvivalCurve survival_from_aalen(const AalenFit& fit, const CovariatePath& path,
                                  const std::vector<double>& horizons,
                                  SurvivalTransform transform = SurvivalTransform::kExponential,
                                  bool include_jump_times = true);

}  // namespace tte
