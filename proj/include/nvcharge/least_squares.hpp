#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace nvcharge {

enum class FitStatus { Converged, MaxIterations, AtBound, RankDeficient };

std::string_view fit_status_name(FitStatus s) noexcept;

struct LeastSquaresOptions {
  int max_iterations = 200;
  double relative_step = 1e-6;  // central-difference step in parameter units
  double gradient_tol = 1e-12;
  double step_tol = 1e-12;
  double cost_tol = 1e-15;       // relative cost decrease
  double rank_tol = 1e-10;       // smallest/largest singular value of J
};

struct LeastSquaresResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  Eigen::MatrixXd covariance;  // inverse of J^T J; unscaled
  double cost = 0.0;           // 0.5 * |r|^2
  int iterations = 0;
  FitStatus status = FitStatus::MaxIterations;
  std::vector<double> cost_history;  // cost after each accepted step, starting with the initial cost
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Box-constrained Levenberg-Marquardt with a central-difference Jacobian.
/// Steps leaving [lower, upper] are projected back onto the box.
LeastSquaresResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd x0,
                                       const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                       const LeastSquaresOptions& options = {});

/// Central-difference Jacobian with absolute step `h` per parameter.
Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals, const Eigen::VectorXd& x, double h);

}  // namespace nvcharge
