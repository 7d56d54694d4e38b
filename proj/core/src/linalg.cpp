#include "linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace tte::detail {

CheckedCholesky::CheckedCholesky(const Eigen::MatrixXd& a, double relative_tolerance)
    : l_(Eigen::MatrixXd::Zero(a.rows(), a.cols())) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
    const double scale = std::abs(a(j, j));
    if (!(d > relative_tolerance * scale) || !(scale > 0.0) || !std::isfinite(d)) {
      dependent_ = static_cast<std::size_t>(j);
      return;
    }
    const double ljj = std::sqrt(d);
    l_(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
      l_(i, j) = s / ljj;
    }
  }
}

Eigen::VectorXd CheckedCholesky::solve(const Eigen::VectorXd& b) const {
  const auto lower = l_.triangularView<Eigen::Lower>();
  Eigen::VectorXd y = lower.solve(b);
  return lower.transpose().solve(y);
}

Eigen::MatrixXd CheckedCholesky::inverse() const {
  const auto lower = l_.triangularView<Eigen::Lower>();
  Eigen::MatrixXd y = lower.solve(Eigen::MatrixXd::Identity(l_.rows(), l_.cols()));
  return lower.transpose().solve(y);
}

double information_ratio(const Eigen::MatrixXd& info, const Eigen::MatrixXd& reference) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(info, reference, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) return 0.0;
  return solver.eigenvalues().minCoeff();
}

}  // namespace tte::detail
