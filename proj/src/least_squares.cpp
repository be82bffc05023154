#include "nvcharge/least_squares.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "nvcharge/error.hpp"

namespace nvcharge {

std::string_view fit_status_name(FitStatus s) noexcept {
  switch (s) {
    case FitStatus::Converged: return "converged";
    case FitStatus::MaxIterations: return "max_iterations";
    case FitStatus::AtBound: return "at_bound";
    case FitStatus::RankDeficient: return "rank_deficient";
  }
  return "?";
}

Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals, const Eigen::VectorXd& x, double h) {
  Eigen::MatrixXd jac;
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp(j) = x(j) + h;
    const Eigen::VectorXd fp = residuals(xp);
    xp(j) = x(j) - h;
    const Eigen::VectorXd fm = residuals(xp);
    xp(j) = x(j);
    if (jac.size() == 0) jac.resize(fp.size(), x.size());
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

namespace {

double condition_ratio(const Eigen::MatrixXd& jac) {
  if (jac.cols() == 0) return 1.0;
  if (jac.rows() < jac.cols()) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0)) return 0.0;
  return s(s.size() - 1) / s(0);
}

Eigen::VectorXd project(Eigen::VectorXd x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

LeastSquaresResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd x0,
                                       const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                       const LeastSquaresOptions& opt) {
  if (x0.size() != lower.size() || x0.size() != upper.size() || (lower.array() > upper.array()).any()) {
    throw ConfigError("levenberg_marquardt: inconsistent bounds", {"bounds"});
  }
  const double h = opt.relative_step;
  LeastSquaresResult res;
  res.x = project(std::move(x0), lower, upper);
  res.residuals = residuals(res.x);
  if (!res.residuals.allFinite()) throw NumericalError("levenberg_marquardt: non-finite residuals");
  res.cost = 0.5 * res.residuals.squaredNorm();
  res.cost_history.push_back(res.cost);

  res.jacobian = numeric_jacobian(residuals, res.x, h);
  if (condition_ratio(res.jacobian) < opt.rank_tol) {
    res.status = FitStatus::RankDeficient;
    return res;
  }

  double mu = -1.0;
  double nu = 2.0;
  bool converged = false;
  for (res.iterations = 0; res.iterations < opt.max_iterations && !converged;) {
    const Eigen::MatrixXd& jac = res.jacobian;
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * res.residuals;
    if (res.cost <= 1e-32 ||
        g.cwiseAbs().maxCoeff() <= opt.gradient_tol * (jac.norm() * res.residuals.norm() + 1e-300)) {
      converged = true;
      break;
    }
    Eigen::VectorXd dscale = a.diagonal().cwiseMax(1e-12 * a.diagonal().maxCoeff());
    if (mu < 0.0) mu = 1e-3;

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += mu * dscale;
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      const Eigen::VectorXd x_new = project(res.x + step, lower, upper);
      const Eigen::VectorXd taken = x_new - res.x;
      if (taken.norm() <= opt.step_tol * (res.x.norm() + opt.step_tol)) {
        converged = true;
        break;
      }
      const Eigen::VectorXd r_new = residuals(x_new);
      const double cost_new = r_new.allFinite() ? 0.5 * r_new.squaredNorm() : HUGE_VAL;
      const double predicted = -(g.dot(taken) + 0.5 * taken.dot(a * taken));
      if (cost_new < res.cost) {
        const double rho = predicted > 0.0 ? (res.cost - cost_new) / predicted : 0.0;
        const double rel = (res.cost - cost_new) / res.cost;
        res.x = x_new;
        res.residuals = r_new;
        res.cost = cost_new;
        res.cost_history.push_back(cost_new);
        mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        nu = 2.0;
        accepted = true;
        ++res.iterations;
        if (rel <= opt.cost_tol) converged = true;
        res.jacobian = numeric_jacobian(residuals, res.x, h);
      } else {
        mu *= nu;
        nu *= 2.0;
        if (mu > 1e20) {
          // No descent direction left at floating-point resolution.
          converged = true;
          break;
        }
      }
    }
  }

  const Eigen::MatrixXd a = res.jacobian.transpose() * res.jacobian;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (s.size() > 0 && s(s.size() - 1) <= opt.rank_tol * opt.rank_tol * s(0)) {
    res.status = FitStatus::RankDeficient;
    res.covariance = Eigen::MatrixXd::Constant(a.rows(), a.cols(), std::nan(""));
    return res;
  }
  res.covariance = svd.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));

  res.status = converged ? FitStatus::Converged : FitStatus::MaxIterations;
  for (Eigen::Index j = 0; j < res.x.size(); ++j) {
    const double tol = 1e-9 * (1.0 + std::abs(res.x(j)));
    if (res.x(j) - lower(j) <= tol || upper(j) - res.x(j) <= tol) res.status = FitStatus::AtBound;
  }
  return res;
}

}  // namespace nvcharge
