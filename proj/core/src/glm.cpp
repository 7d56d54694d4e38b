#include "tte/glm.hpp"

#include <algorithm>
#include <cmath>

#include "linalg.hpp"
#include "tte/errors.hpp"

namespace tte {
namespace {

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double inv_logit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (w[i] == 0.0) continue;
    ll += w[i] * (y[i] * eta[i] - log1pexp(eta[i]));
  }
  return ll;
}

std::string column_label(const std::vector<std::string>& names, std::size_t j) {
  if (j < names.size()) return names[j];
  return "column " + std::to_string(j);
}

}  // namespace

LogisticFit fit_weighted_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& w, const LogisticOptions& options,
                                  const std::vector<std::string>& column_names) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n || w.size() != n) throw UsageError("logistic fit: dimension mismatch");
  if (p == 0) throw UsageError("logistic fit: empty design");
  double w_pos = 0.0;
  double w_neg = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(w[i] >= 0.0) || !std::isfinite(w[i])) throw UsageError("logistic fit: negative or non-finite weight");
    if (y[i] != 0.0 && y[i] != 1.0) throw UsageError("logistic fit: outcome must be binary");
    (y[i] == 1.0 ? w_pos : w_neg) += w[i];
  }
  if (!(w_pos > 0.0) || !(w_neg > 0.0)) {
    throw SeparationError("logistic fit: outcome has a single class among positively weighted rows");
  }

  // Rank check on the weighted cross-product, scaled to unit diagonal.
  const Eigen::MatrixXd info_at_zero = 0.25 * (x.transpose() * w.asDiagonal() * x);
  {
    Eigen::MatrixXd xtx = x.transpose() * w.asDiagonal() * x;
    Eigen::VectorXd d = xtx.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd scaled = d.asDiagonal() * xtx * d.asDiagonal();
    detail::CheckedCholesky chol(scaled, 1e-10);
    if (!chol.ok()) {
      const auto j = *chol.dependent_column();
      throw SingularDesignError("logistic fit: singular design, dependent column " + column_label(column_names, j),
                                j);
    }
  }

  LogisticFit fit;
  fit.coefficients = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double ll = loglik(eta, y, w);
  Eigen::VectorXd mu(n);
  Eigen::VectorXd v(n);
  bool settled = false;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    fit.n_iterations = iter;
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = inv_logit(eta[i]);
      v[i] = w[i] * mu[i] * (1.0 - mu[i]);
    }
    const Eigen::VectorXd score = x.transpose() * (w.cwiseProduct(y - mu));
    if (score.cwiseAbs().maxCoeff() <= options.score_tolerance) {
      fit.converged = true;
      break;
    }
    const Eigen::MatrixXd info = x.transpose() * v.asDiagonal() * x;
    Eigen::VectorXd step = info.ldlt().solve(score);
    if (!step.allFinite()) break;

    double factor = 1.0;
    Eigen::VectorXd beta_new;
    Eigen::VectorXd eta_new;
    double ll_new = -INFINITY;
    for (int half = 0; half < 30; ++half) {
      beta_new = fit.coefficients + factor * step;
      eta_new = x * beta_new;
      ll_new = loglik(eta_new, y, w);
      if (ll_new >= ll - 1e-12 * std::abs(ll)) break;
      factor *= 0.5;
    }
    if (!(ll_new >= ll - 1e-12 * std::abs(ll))) break;
    const double change = std::abs(ll_new - ll);
    fit.coefficients = beta_new;
    eta = eta_new;
    ll = ll_new;
    if (fit.coefficients.cwiseAbs().maxCoeff() > options.separation_threshold) break;
    if (change <= options.relative_loglik_tolerance * std::max(std::abs(ll), 1e-300)) {
      if (settled) {
        fit.converged = true;
        break;
      }
      settled = true;
    } else {
      settled = false;
    }
  }
  fit.log_likelihood = ll;
  if (!fit.converged && fit.coefficients.cwiseAbs().maxCoeff() > options.separation_threshold) {
    throw SeparationError("logistic fit: perfect separation (diverging coefficients)");
  }
  if (!fit.converged) throw ConvergenceError("logistic fit: IRLS did not converge");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = inv_logit(eta[i]);
    v[i] = w[i] * m * (1.0 - m);
  }
  const Eigen::MatrixXd info = x.transpose() * v.asDiagonal() * x;
  if (detail::information_ratio(info, info_at_zero) < options.information_collapse) {
    throw SeparationError("logistic fit: quasi-complete separation (information collapsed)");
  }
  return fit;
}

double predict_prob(const LogisticFit& fit, const Eigen::Ref<const Eigen::VectorXd>& row) {
  if (row.size() != fit.coefficients.size()) throw UsageError("predict_prob: width mismatch");
  const double p = inv_logit(fit.coefficients.dot(row));
  return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

double predict_prob(const LogisticFit& fit, const std::vector<double>& row) {
  return predict_prob(fit, Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
}

}  // namespace tte
