#include "postadj/condex/self_inconsistency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "postadj/errors.hpp"

namespace postadj::condex {

namespace {

constexpr double kQuadTol = 1e-12;
constexpr double kAcceptableError = 1e-8;

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

template <typename F>
double integrate_tail(F f, double& err_sum) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double v = gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(),
                                                        15, kQuadTol, &err);
  err_sum += err;
  return v;
}

}  // namespace

SelfInconsistency self_inconsistency_demo(const BivariateParams& p) {
  if (!(p.sigma > 0.0) || !(p.t > 0.0) || !std::isfinite(p.mu + p.alpha + p.beta)) {
    throw NumericDomainError("self_inconsistency_demo: need sigma > 0, t > 0 and finite parameters");
  }
  // x = y - t, so the conditioning margin has density exp(-x) on x > 0.
  const auto m = [&](double y) { return p.mu + p.alpha * y; };
  const auto s = [&](double y) { return p.sigma * std::pow(y, p.beta); };

  double err = 0.0;
  const double both_below_max = integrate_tail(
      [&](double x) {
        const double y = p.t + x;
        return std::exp(-x) * (norm_cdf((y - m(y)) / s(y)) - norm_cdf((p.t - m(y)) / s(y)));
      },
      err);
  const double below_max = integrate_tail(
      [&](double x) {
        const double y = p.t + x;
        return std::exp(-x) * norm_cdf((y - m(y)) / s(y));
      },
      err);
  const double q = integrate_tail(
      [&](double x) {
        const double y = p.t + x;
        return std::exp(-x) * norm_cdf((m(y) - p.t) / s(y));
      },
      err);

  SelfInconsistency out;
  out.q = q;
  out.p_keef = both_below_max / below_max;
  out.p_wadsworth = q / (2.0 - q);
  out.error_estimate = err;
  out.converged = std::isfinite(out.p_keef) && std::isfinite(out.p_wadsworth) && err < kAcceptableError;
  return out;
}

}  // namespace postadj::condex
