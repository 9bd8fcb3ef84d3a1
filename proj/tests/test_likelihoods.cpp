#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "postadj/errors.hpp"
#include "postadj/gaussian_models.hpp"
#include "postadj/grid_gmrf.hpp"
#include "postadj/likelihoods.hpp"

using namespace postadj;

namespace {

double mvn_logpdf_dense(const Eigen::VectorXd& y, const Eigen::MatrixXd& cov) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  return -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * M_PI) + std::log(lu.determinant()) +
                 y.dot(lu.inverse() * y));
}

Eigen::MatrixXd matern32_plus_nugget(const SiteSet& s, const std::vector<std::size_t>& idx, double tau, double rho,
                                     double sigma) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = s[idx[static_cast<std::size_t>(i)]], b = s[idx[static_cast<std::size_t>(j)]];
      const double h = std::sqrt(12.0) * std::hypot(a[0] - b[0], a[1] - b[1]) / rho;
      c(i, j) = sigma * sigma * (1.0 + h) * std::exp(-h) + (i == j ? 1.0 / tau : 0.0);
    }
  }
  return c;
}

}  // namespace

TEST_CASE("composite totals, term values and weights") {
  const Eigen::Vector3d y(0.5, -1.0, 2.0);
  const CompositeLikelihood cl = gaussian_iid_loglik(y);
  const Eigen::Vector2d th(0.3, 1.4);
  const Eigen::VectorXd tv = cl.term_values(th);
  CHECK(tv.size() == 3);
  CHECK(cl.value(th) == doctest::Approx(tv.sum()).epsilon(1e-14));
  CHECK(tv(1) == doctest::Approx(-0.5 * std::log(2.0 * M_PI * 1.96) - 1.69 / (2.0 * 1.96)));
  CHECK(eval_composite(cl, ParamVector(cl.layout(), th)) == cl.value(th));

  std::vector<CompositeTerm> terms{{{0, 0, 2.0}, [](const Eigen::VectorXd& t) { return t(0); }},
                                   {{1, 0, 0.0}, [](const Eigen::VectorXd&) { return std::nan(""); }},
                                   {{2, 1, 0.5}, [](const Eigen::VectorXd& t) { return 3.0 * t(0); }}};
  const CompositeLikelihood w(ParamLayout({"x"}, {Link::identity}), {std::make_shared<FunctionTermGroup>(terms)});
  CHECK(w.value(Eigen::VectorXd::Constant(1, 2.0)) == doctest::Approx(2.0 * 2.0 + 0.5 * 6.0));
}

TEST_CASE("non-finite totals name the offending term") {
  std::vector<CompositeTerm> terms{{{0, 0, 1.0}, [](const Eigen::VectorXd&) { return 1.0; }},
                                   {{4, 7, 1.0}, [](const Eigen::VectorXd& t) { return std::log(t(0)); }}};
  const CompositeLikelihood cl(ParamLayout({"x"}, {Link::identity}), {std::make_shared<FunctionTermGroup>(terms)});
  try {
    cl.value(Eigen::VectorXd::Constant(1, -1.0));
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(e.unit() == 4);
    CHECK(e.time() == 7);
  }
}

TEST_CASE("rectangular blocks partition the sites") {
  Rng rng = make_stream(1, 0);
  const SiteSet sites = SiteSet::uniform(200, 0.0, 10.0, 0.0, 10.0, rng);
  const Blocks b = rectangular_blocks(sites, 0.0, 10.0, 0.0, 10.0, 3, 3);
  std::multiset<std::size_t> seen;
  for (const auto& blk : b) {
    CHECK(!blk.empty());
    seen.insert(blk.begin(), blk.end());
  }
  CHECK(seen.size() == 200);
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 200);
  CHECK(b.size() <= 9);
}

TEST_CASE("block composite against dense densities") {
  Rng rng = make_stream(2, 0);
  const SiteSet sites = SiteSet::uniform(12, 0.0, 10.0, 0.0, 10.0, rng);
  const MaternParams truth{1.0, 4.0, 1.5};
  const Eigen::MatrixXd data = sample_field(sites, truth, 3, rng);
  std::vector<std::size_t> all(12);
  for (std::size_t k = 0; k < 12; ++k) all[k] = k;
  const Eigen::Vector3d th(20.0, 5.0, 1.2);

  // One block is the joint likelihood.
  const CompositeLikelihood joint = block_composite_gaussian(sites, data, {all}, 1.5);
  const Eigen::MatrixXd cov = matern32_plus_nugget(sites, all, th(0), th(1), th(2));
  double ref = 0.0;
  for (Eigen::Index r = 0; r < data.rows(); ++r) ref += mvn_logpdf_dense(data.row(r).transpose(), cov);
  CHECK(joint.value(th) == doctest::Approx(ref).epsilon(1e-10));
  CHECK(joint.num_terms() == 3);

  // Two blocks are two independent dense densities.
  const Blocks b{{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9, 10, 11}};
  const CompositeLikelihood two = block_composite_gaussian(sites, data, b, 1.5);
  double ref2 = 0.0;
  for (const auto& blk : b) {
    const Eigen::MatrixXd c = matern32_plus_nugget(sites, blk, th(0), th(1), th(2));
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      Eigen::VectorXd y(static_cast<Eigen::Index>(blk.size()));
      for (std::size_t k = 0; k < blk.size(); ++k) y(static_cast<Eigen::Index>(k)) = data(r, static_cast<Eigen::Index>(blk[k]));
      ref2 += mvn_logpdf_dense(y, c);
    }
  }
  CHECK(two.value(th) == doctest::Approx(ref2).epsilon(1e-10));
  CHECK(two.num_terms() == 6);
}

TEST_CASE("grid GMRF likelihood against the dense marginal covariance") {
  GridGmrfSpec spec;
  spec.x_max = 6.0;
  spec.y_max = 6.0;
  spec.spacing = 1.5;
  spec.extension_cells = 2;
  const GridGmrf g(spec);
  Rng rng = make_stream(3, 0);
  const SiteSet sites = SiteSet::uniform(7, 0.0, 6.0, 0.0, 6.0, rng);
  Eigen::MatrixXd data(4, 7);
  std::normal_distribution<double> nd;
  for (Eigen::Index i = 0; i < data.size(); ++i) data(i) = nd(rng);
  const CompositeLikelihood cl = gmrf_field_loglik(g, sites, data);
  const Eigen::Vector3d th(8.0, 3.0, 0.9);
  const Eigen::MatrixXd a = g.projection(sites);
  const Eigen::MatrixXd q = g.precision({th(2) * th(2), th(1), 1.0});
  const Eigen::MatrixXd cov = a * q.inverse() * a.transpose() + Eigen::MatrixXd::Identity(7, 7) / th(0);
  double ref = 0.0;
  for (Eigen::Index r = 0; r < 4; ++r) ref += mvn_logpdf_dense(data.row(r).transpose(), cov);
  CHECK(cl.value(th) == doctest::Approx(ref).epsilon(1e-9));
  CHECK(cl.term_values(th).sum() == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("mvn_logpdf_chol and student-t sampler") {
  Eigen::Matrix2d cov;
  cov << 2.0, 0.3, 0.3, 1.0;
  const Eigen::Vector2d y(0.4, -1.1), mean(0.1, 0.2);
  const Eigen::MatrixXd l = cov.llt().matrixL();
  CHECK(mvn_logpdf_chol(y, mean, l) == doctest::Approx(mvn_logpdf_dense(y - mean, cov)).epsilon(1e-13));

  Rng rng = make_stream(4, 0);
  const Eigen::VectorXd t = student_t_sample(5.0, 200000, rng);
  CHECK(t.mean() == doctest::Approx(0.0).epsilon(0.01));
  CHECK((t.array() - t.mean()).square().mean() == doctest::Approx(5.0 / 3.0).epsilon(0.05));
  const Eigen::VectorXd c = student_t_sample(1.0, 100001, rng);
  std::vector<double> v(c.data(), c.data() + c.size());
  std::nth_element(v.begin(), v.begin() + 75000, v.end());
  CHECK(v[75000] == doctest::Approx(1.0).epsilon(0.03));  // Cauchy upper quartile
}
