#include <doctest.h>

#include <cmath>
#include <random>

#include "postadj/gaussian_models.hpp"
#include "postadj/sandwich.hpp"

using namespace postadj;

namespace {

// Terms whose score at theta = 0 is s_k.
CompositeLikelihood linear_terms(const std::vector<double>& scores, const std::vector<std::size_t>& times) {
  std::vector<CompositeTerm> terms;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double s = scores[k];
    terms.push_back({{k, times[k], 1.0}, [s](const Eigen::VectorXd& th) { return s * th(0) - 0.5 * th(0) * th(0); }});
  }
  return CompositeLikelihood(ParamLayout({"x"}, {Link::identity}),
                             {std::make_shared<FunctionTermGroup>(std::move(terms))});
}

}  // namespace

TEST_CASE("Fisher reduction for a correctly specified model") {
  Rng rng = make_stream(42, 0);
  std::normal_distribution<double> nd;
  Eigen::VectorXd y(10000);
  for (auto& v : y) v = 2.0 + 0.5 * nd(rng);
  const CompositeLikelihood cl = gaussian_iid_loglik(y);
  const double mu = y.mean();
  const Eigen::Vector2d mle(mu, std::sqrt((y.array() - mu).square().mean()));
  const SandwichEstimate est = estimate_sandwich(cl, mle);
  CHECK(relative_frobenius(est.J.matrix(), est.H.matrix()) < 0.1);
  const Eigen::MatrixXd dc = est.C - Eigen::MatrixXd::Identity(2, 2);
  CHECK(dc.jacobiSvd().singularValues()(0) < 0.1);
  // H on the (mu, log sigma) scale is diag(n / sigma^2, 2n).
  CHECK(est.H(0, 0) == doctest::Approx(1e4 / (mle(1) * mle(1))).epsilon(1e-5));
  CHECK(est.H(1, 1) == doctest::Approx(2e4).epsilon(1e-5));
}

TEST_CASE("misspecified variance gives C = sqrt(J / H)") {
  Rng rng = make_stream(43, 0);
  const Eigen::VectorXd y = student_t_sample(5.0, 40000, rng);
  const CompositeLikelihood cl = gaussian_fixed_var_loglik(y);
  const SandwichEstimate est = estimate_sandwich(cl, Eigen::VectorXd::Constant(1, y.mean()));
  // Var of t_5 is 5/3, and H = n for the unit-variance working model.
  CHECK(est.H(0, 0) == doctest::Approx(40000.0).epsilon(1e-6));
  CHECK(est.C(0, 0) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(0.05));
  CHECK(est.C(0, 0) == doctest::Approx(std::sqrt(est.J(0, 0) / est.H(0, 0))).epsilon(1e-8));
}

TEST_CASE("windowed score outer product against a brute-force double sum") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<std::size_t> t(0, 20);
  const Eigen::Index n = 60, p = 3;
  Eigen::MatrixXd s(n, p);
  std::vector<std::size_t> times;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) s(i, k) = nd(rng);
    times.push_back(t(rng));
  }
  for (std::size_t w : {0u, 1u, 3u, 50u}) {
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto a = times[static_cast<std::size_t>(i)], b = times[static_cast<std::size_t>(j)];
        if ((a > b ? a - b : b - a) <= w) ref += s.row(i).transpose() * s.row(j);
      }
    }
    CHECK((windowed_score_outer(s, times, w) - ref).norm() < 1e-10 * ref.norm());
  }
}

TEST_CASE("J uses term weights and the neighbour window") {
  // Two terms at the same time are summed before the outer product.
  const CompositeLikelihood same = linear_terms({1.0, 2.0}, {0, 0});
  CHECK(estimate_J(same, Eigen::VectorXd::Zero(1), {0}).matrix(0, 0) == doctest::Approx(9.0));
  CompositeLikelihood apart = linear_terms({1.0, 2.0}, {0, 3});
  CHECK(estimate_J(apart, Eigen::VectorXd::Zero(1), {0}).matrix(0, 0) == doctest::Approx(5.0));
  CHECK(estimate_J(apart, Eigen::VectorXd::Zero(1), {3}).matrix(0, 0) == doctest::Approx(9.0));
  apart.set_neighbors({3});
  CHECK(estimate_sandwich(apart, Eigen::VectorXd::Zero(1)).window == 3);
}

TEST_CASE("adjust_draws is the affine map around theta*") {
  Rng rng = make_stream(5, 0);
  std::normal_distribution<double> nd;
  Eigen::VectorXd y(500);
  for (auto& v : y) v = 1.0 + 2.0 * nd(rng);
  const CompositeLikelihood cl = gaussian_iid_loglik(y);
  PipelineConfig pc;
  pc.n_draws = 400;
  pc.seed = 5;
  const PipelineResult res = full_adjustment_pipeline(cl, PriorSet(), pc);
  REQUIRE(res.estimate);
  const SandwichEstimate& est = *res.estimate;
  const Eigen::VectorXd ustar = est.theta_star.unconstrained();
  const Eigen::MatrixXd expect = ((res.unadjusted.draws_u.rowwise() - ustar.transpose()) * est.C.transpose()).rowwise() +
                                 ustar.transpose();
  CHECK((res.adjusted.draws_u - expect).norm() < 1e-12 * expect.norm());
  CHECK(res.adjusted.source_checksum == res.unadjusted.checksum());
  CHECK(res.adjusted.draws.col(1).minCoeff() > 0.0);  // sigma back on the natural scale

  // The split pipeline reproduces the same unadjusted draws.
  const PipelineResult first = sample_posterior(cl, PriorSet(), pc);
  CHECK(first.unadjusted.checksum() == res.unadjusted.checksum());
  CHECK(!first.estimate);
}

TEST_CASE("sandwich json round trip") {
  Rng rng = make_stream(6, 0);
  const Eigen::VectorXd y = student_t_sample(4.0, 300, rng);
  const SandwichEstimate est = estimate_sandwich(gaussian_iid_loglik(y), Eigen::Vector2d(0.0, 1.0));
  const SandwichEstimate back = SandwichEstimate::from_json(est.to_json());
  CHECK(back.C == est.C);
  CHECK(back.H.matrix() == est.H.matrix());
  CHECK(back.theta_star.values() == est.theta_star.values());
  CHECK(back.theta_star.layout().links() == est.theta_star.layout().links());
  nlohmann::json bad = est.to_json();
  bad["C"] = nlohmann::json::array({nlohmann::json::array({1.0})});
  CHECK_THROWS_AS(SandwichEstimate::from_json(bad), DimensionError);
}

TEST_CASE("pipeline failures name the stage") {
  // A flat likelihood has a mode everywhere but no Laplace approximation.
  std::vector<CompositeTerm> terms{{{0, 0, 1.0}, [](const Eigen::VectorXd&) { return 0.0; }}};
  const CompositeLikelihood cl(ParamLayout({"x"}, {Link::identity}), {std::make_shared<FunctionTermGroup>(std::move(terms))});
  try {
    full_adjustment_pipeline(cl, PriorSet(), PipelineConfig{});
    FAIL("expected a PipelineError");
  } catch (const PipelineError& e) {
    CHECK(e.stage() == "sample");
  }
}
