#ifndef POSTADJ_NUMDIFF_HPP
#define POSTADJ_NUMDIFF_HPP

#include <functional>

#include <Eigen/Dense>

#include "postadj/constants.hpp"

namespace postadj {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Relative step sizes; the step for component k is rel * max(1, |x_k|).
struct DiffSteps {
  double gradient_rel = tol::gradient_step_rel;
  double hessian_rel = tol::hessian_step_rel;
};

/// Central differences. Non-finite stencil values throw EvaluationError.
Eigen::VectorXd numeric_gradient(const ScalarFn& f, const Eigen::VectorXd& x,
                                 const DiffSteps& steps = {});

/// Central-difference Jacobian of a vector-valued f: row r is the gradient of f_r.
/// Costs 2p evaluations of f regardless of the output length.
Eigen::MatrixXd numeric_jacobian(const VectorFn& f, const Eigen::VectorXd& x,
                                 const DiffSteps& steps = {});

/// Second-order central differences, symmetric by construction.
Eigen::MatrixXd numeric_hessian(const ScalarFn& f, const Eigen::VectorXd& x,
                                const DiffSteps& steps = {});

}  // namespace postadj

#endif  // POSTADJ_NUMDIFF_HPP
