#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "postadj/condex/likelihood.hpp"
#include "postadj/errors.hpp"
#include "postadj/gaussian_models.hpp"
#include "postadj/numdiff.hpp"

using namespace postadj;

namespace {

double condex_2site(const Eigen::VectorXd& th, double y0, double y, double d) {
  condex::Params p;
  p.lambda = th(0);
  p.kappa = th(1);
  p.sigma_b = th(2);
  p.rho_b = th(3);
  p.tau = th(4);
  const SiteSet sites(std::vector<Site>{{0.0, 0.0}, {d, 0.0}});
  return condex::condex_loglik(p, sites, Eigen::Vector2d(y0, y), 0);
}

}  // namespace

TEST_CASE("gaussian gradients and hessians match closed forms") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_g = 0.0, worst_h = 0.0, worst_fg = 0.0, worst_fh = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd y(40);
    for (auto& v : y) v = 0.5 + 1.3 * nd(rng);
    const Eigen::Vector2d x(2.0 * u(rng), u(rng));
    const CompositeLikelihood cl = gaussian_iid_loglik(y);
    const auto f = unconstrained_objective(cl);
    const auto ref = oracle::gaussian_iid(y, x(0), x(1));
    CHECK(f(x) == doctest::Approx(ref.value).epsilon(1e-12));
    worst_g = std::max(worst_g, oracle::rel_err(numeric_gradient(f, x), ref.grad));
    worst_h = std::max(worst_h, oracle::rel_err(numeric_hessian(f, x), ref.hess));

    const CompositeLikelihood cl1 = gaussian_fixed_var_loglik(y);
    const auto g = unconstrained_objective(cl1);
    const Eigen::VectorXd m = Eigen::VectorXd::Constant(1, 2.0 * u(rng));
    const auto fr = oracle::gaussian_fixed_var(y, m(0));
    worst_fg = std::max(worst_fg, oracle::rel_err(numeric_gradient(g, m), fr.grad));
    worst_fh = std::max(worst_fh, oracle::rel_err(numeric_hessian(g, m), fr.hess));
  }
  CHECK(worst_g < 1e-5);
  CHECK(worst_h < 1e-5);
  CHECK(worst_fg < 1e-5);
  CHECK(worst_fh < 1e-5);
}

TEST_CASE("one-site conditional extremes derivatives match closed forms") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd;
  double worst_g = 0.0, worst_h = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd th(5);
    th << 2.0 + 28.0 * u(rng), 0.3 + 1.5 * u(rng), 0.5 + 2.5 * u(rng), 1.0 + 19.0 * u(rng), 2.0 + 48.0 * u(rng);
    const double d = 0.5 + 14.5 * u(rng);
    const double y0 = 4.0 + 3.0 * u(rng);
    const double y = y0 * std::exp(-std::pow(d / th(0), th(1))) + nd(rng);
    const auto f = [&](const Eigen::VectorXd& t) { return condex_2site(t, y0, y, d); };
    const auto ref = oracle::condex_one_site(y0, y, d, th);
    REQUIRE(f(th) == doctest::Approx(ref.value).epsilon(1e-12));
    worst_g = std::max(worst_g, oracle::rel_err(numeric_gradient(f, th), ref.grad));
    worst_h = std::max(worst_h, oracle::rel_err(numeric_hessian(f, th), ref.hess));
  }
  CHECK(worst_g < 1e-5);
  CHECK(worst_h < 1e-5);
}

TEST_CASE("jacobian rows are gradients") {
  const VectorFn f = [](const Eigen::VectorXd& x) {
    return Eigen::Vector3d(x(0) * x(1), std::sin(x(0)), std::exp(x(1)));
  };
  const Eigen::Vector2d x(0.3, -0.7);
  Eigen::MatrixXd ref(3, 2);
  ref << x(1), x(0), std::cos(x(0)), 0.0, 0.0, std::exp(x(1));
  CHECK(oracle::rel_err(numeric_jacobian(f, x), ref) < 1e-8);
  const Eigen::MatrixXd h = numeric_hessian([](const Eigen::VectorXd& v) { return v(0) * v(0) * v(1); }, x);
  CHECK((h - h.transpose()).norm() == 0.0);
}

TEST_CASE("non-finite stencil values throw") {
  const ScalarFn f = [](const Eigen::VectorXd& x) { return std::log(x(0)); };
  CHECK_THROWS_AS(numeric_gradient(f, Eigen::VectorXd::Constant(1, 0.0)), EvaluationError);
  CHECK_THROWS_AS(numeric_hessian(f, Eigen::VectorXd::Constant(1, -1.0)), EvaluationError);
}
