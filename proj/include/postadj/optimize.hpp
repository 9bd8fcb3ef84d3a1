#ifndef POSTADJ_OPTIMIZE_HPP
#define POSTADJ_OPTIMIZE_HPP

#include <string>

#include <Eigen/Dense>

#include "postadj/constants.hpp"
#include "postadj/numdiff.hpp"

namespace postadj {

struct OptimOptions {
  int max_iter = 500;
  double grad_abs = tol::mode_grad_abs;
  double grad_rel = tol::mode_grad_rel;
  double max_step = 2.0;  // cap on the first trial step length
  DiffSteps steps;
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string status;
};

/// BFGS ascent with backtracking line search and central-difference gradients.
/// Convergence: ||g|| < grad_abs, ||g|| < grad_rel (1 + |f|), or a quasi-Newton
/// predicted gain g^T H^-1 g / 2 below 1e-10 (1 + |f|). Points where f
/// throws or is non-finite are treated as -inf during the line search.
/// Failure to converge is reported through `converged` and `status`.
OptimResult maximize(const ScalarFn& f, const Eigen::VectorXd& x0, const OptimOptions& opts = {});

}  // namespace postadj

#endif  // POSTADJ_OPTIMIZE_HPP
