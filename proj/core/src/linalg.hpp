#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>

namespace tte::detail {

// Cholesky factorisation of a symmetric positive semi-definite matrix that
// reports the first column found to be (numerically) a linear combination of
// the preceding ones instead of silently producing garbage.
class CheckedCholesky {
 public:
  explicit CheckedCholesky(const Eigen::MatrixXd& a, double relative_tolerance = 1e-10);

  bool ok() const { return !dependent_; }
  std::optional<std::size_t> dependent_column() const { return dependent_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd inverse() const;

 private:
  Eigen::MatrixXd l_;
  std::optional<std::size_t> dependent_;
};

// Smallest eigenvalue of `reference`^{-1/2} `info` `reference`^{-1/2}; near
// zero when the information has collapsed along some direction (monotone
// likelihood). `reference` must be positive definite.
double information_ratio(const Eigen::MatrixXd& info, const Eigen::MatrixXd& reference);

}  // namespace tte::detail
