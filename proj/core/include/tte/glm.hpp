#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace tte {

struct LogisticFit {
  Eigen::VectorXd coefficients;  // intercept first when the design has one
  bool converged = false;
  int n_iterations = 0;
  double log_likelihood = 0.0;
};

struct LogisticOptions {
  double score_tolerance = 1e-8;
  double relative_loglik_tolerance = 1e-10;
  int max_iterations = 100;
  double separation_threshold = 30.0;
  // Separation is also declared when the information at the optimum falls
  // below this fraction of the information at zero along some direction.
  double information_collapse = 1e-6;
};

// Case-weighted maximum likelihood by IRLS with step-halving. Column names
// are only used to label a singular-design error.
LogisticFit fit_weighted_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                                  const Eigen::VectorXd& case_weights,
                                  const LogisticOptions& options = {},
                                  const std::vector<std::string>& column_names = {});

// Inverse logit of the linear predictor, clamped to [1e-12, 1 - 1e-12].
double predict_prob(const LogisticFit& fit, const Eigen::Ref<const Eigen::VectorXd>& design_row);
double predict_prob(const LogisticFit& fit, const std::vector<double>& design_row);

inline constexpr double kProbabilityFloor = 1e-12;

}  // namespace tte
