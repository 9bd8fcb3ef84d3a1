#include "postadj/optimize.hpp"

#include <cmath>
#include <limits>

#include "postadj/errors.hpp"

namespace postadj {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kFlatGainRel = 1e-10;

double safe_eval(const ScalarFn& f, const Eigen::VectorXd& x, int& count) {
  ++count;
  try {
    const double v = f(x);
    return std::isfinite(v) ? v : kNegInf;
  } catch (const Error&) {
    return kNegInf;
  }
}

bool small_gradient(const Eigen::VectorXd& g, double fx, const OptimOptions& o) {
  const double n = g.norm();
  return n < o.grad_abs || n < o.grad_rel * (1.0 + std::abs(fx));
}

// Newton-decrement test: the quasi-Newton model predicts no gain above the
// rounding level of f. Catches gradients stuck at the numeric-noise floor.
bool flat_to_rounding(const Eigen::VectorXd& g, const Eigen::MatrixXd& hinv, double fx) {
  return 0.5 * g.dot(hinv * g) < kFlatGainRel * (1.0 + std::abs(fx));
}

}  // namespace

OptimResult maximize(const ScalarFn& f, const Eigen::VectorXd& x0, const OptimOptions& opts) {
  OptimResult res;
  const Eigen::Index p = x0.size();
  Eigen::VectorXd x = x0;
  double fx = safe_eval(f, x, res.evaluations);
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    res.status = "objective not finite at the starting point";
    return res;
  }

  auto gradient = [&](const Eigen::VectorXd& at, Eigen::VectorXd& g) {
    try {
      g = numeric_gradient(f, at, opts.steps);
      res.evaluations += static_cast<int>(2 * p);
      return g.allFinite();
    } catch (const Error&) {
      return false;
    }
  };

  Eigen::VectorXd g;
  if (!gradient(x, g)) {
    res.x = x;
    res.value = fx;
    res.status = "gradient not finite at the starting point";
    return res;
  }

  // Inverse Hessian approximation of -f.
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd hinv_model;  // last curvature-informed approximation
  bool fresh = true;
  for (int it = 0; it < opts.max_iter; ++it) {
    res.iterations = it;
    if (small_gradient(g, fx, opts)) {
      res.converged = true;
      res.status = "converged";
      break;
    }
    if (hinv_model.size() && flat_to_rounding(g, hinv_model, fx)) {
      res.converged = true;
      res.status = "converged (predicted gain at rounding level)";
      break;
    }
    Eigen::VectorXd dir = hinv * g;
    if (dir.dot(g) <= 0.0) {
      hinv.setIdentity();
      fresh = true;
      dir = g;
    }
    double step = 1.0;
    if (fresh) step = std::min(1.0, opts.max_step / dir.norm());

    const double slope = dir.dot(g);
    Eigen::VectorXd xn;
    double fn = kNegInf;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + step * dir;
      fn = safe_eval(f, xn, res.evaluations);
      if (std::isfinite(fn) && fn >= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (hinv_model.size() && flat_to_rounding(g, hinv_model, fx)) {
        res.converged = true;
        res.status = "converged (line search stalled at rounding level)";
        break;
      }
      if (!fresh) {
        hinv.setIdentity();
        fresh = true;
        continue;
      }
      res.status = "line search failed";
      break;
    }

    Eigen::VectorXd gn;
    if (!gradient(xn, gn)) {
      res.status = "gradient not finite during iterations";
      x = xn;
      fx = fn;
      break;
    }
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = g - gn;  // gradient change of -f
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) {
        hinv = Eigen::MatrixXd::Identity(p, p) * (sy / y.squaredNorm());
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(p, p);
      hinv = (i - rho * s * y.transpose()) * hinv * (i - rho * y * s.transpose()) +
             rho * s * s.transpose();
      fresh = false;
      hinv_model = hinv;
    }
    x = xn;
    fx = fn;
    g = gn;
    res.iterations = it + 1;
  }
  if (!res.converged && res.status.empty()) {
    if (small_gradient(g, fx, opts)) {
      res.converged = true;
      res.status = "converged";
    } else {
      res.status = "maximum iterations reached";
    }
  }
  res.x = x;
  res.value = fx;
  res.grad = g;
  return res;
}

}  // namespace postadj
