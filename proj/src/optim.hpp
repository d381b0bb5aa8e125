#pragma once

// Thin wrappers over Eigen's Levenberg-Marquardt (numeric Jacobian) and
// GSL's Nelder-Mead simplex.

#include <functional>

#include <Eigen/Dense>

namespace geoforge::optim {

using Residuals = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using Objective = std::function<double(const Eigen::VectorXd&)>;

struct LsqResult {
  Eigen::VectorXd x;
  double cost = 0.0;  // 0.5 * |r|^2 at x
  bool converged = false;
};

/// `values` is the residual count; it must be at least x0.size().
LsqResult least_squares(const Residuals& r, int values, const Eigen::VectorXd& x0,
                        int max_evals = 2000, double ftol = 1e-14);

struct MinResult {
  Eigen::VectorXd x;
  double value = 0.0;
  bool converged = false;
};

MinResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                      int max_iters = 2000, double size_tol = 1e-10);

}  // namespace geoforge::optim
