#include "postadj/numdiff.hpp"

#include <cmath>

#include "postadj/errors.hpp"

namespace postadj {

namespace {

// Step rounded so that x + h is exactly representable.
double step_for(double x, double rel) {
  volatile double h = rel * std::max(1.0, std::abs(x));
  volatile double xp = x + h;
  return xp - x;
}

double checked(const ScalarFn& f, const Eigen::VectorXd& x) {
  const double v = f(x);
  if (!std::isfinite(v)) {
    throw EvaluationError("numeric derivative: non-finite function value at stencil point");
  }
  return v;
}

}  // namespace

Eigen::VectorXd numeric_gradient(const ScalarFn& f, const Eigen::VectorXd& x,
                                 const DiffSteps& steps) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xs = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = step_for(x(k), steps.gradient_rel);
    xs(k) = x(k) + h;
    const double fp = checked(f, xs);
    xs(k) = x(k) - h;
    const double fm = checked(f, xs);
    xs(k) = x(k);
    g(k) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd numeric_jacobian(const VectorFn& f, const Eigen::VectorXd& x,
                                 const DiffSteps& steps) {
  Eigen::MatrixXd jac;
  Eigen::VectorXd xs = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = step_for(x(k), steps.gradient_rel);
    xs(k) = x(k) + h;
    const Eigen::VectorXd fp = f(xs);
    xs(k) = x(k) - h;
    const Eigen::VectorXd fm = f(xs);
    xs(k) = x(k);
    if (!fp.allFinite() || !fm.allFinite()) {
      throw EvaluationError("numeric_jacobian: non-finite function value at stencil point");
    }
    if (k == 0) jac.resize(fp.size(), x.size());
    jac.col(k) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

Eigen::MatrixXd numeric_hessian(const ScalarFn& f, const Eigen::VectorXd& x,
                                const DiffSteps& steps) {
  const Eigen::Index p = x.size();
  Eigen::VectorXd h(p);
  for (Eigen::Index k = 0; k < p; ++k) h(k) = step_for(x(k), steps.hessian_rel);

  const double f0 = checked(f, x);
  Eigen::MatrixXd hess(p, p);
  Eigen::VectorXd xs = x;
  for (Eigen::Index i = 0; i < p; ++i) {
    xs(i) = x(i) + h(i);
    const double fp = checked(f, xs);
    xs(i) = x(i) - h(i);
    const double fm = checked(f, xs);
    xs(i) = x(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          xs(i) = x(i) + si * h(i);
          xs(j) = x(j) + sj * h(j);
          acc += si * sj * checked(f, xs);
        }
      }
      xs(i) = x(i);
      xs(j) = x(j);
      hess(i, j) = hess(j, i) = acc / (4.0 * h(i) * h(j));
    }
  }
  return hess;
}

}  // namespace postadj
