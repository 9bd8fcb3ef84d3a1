#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "postadj/condex/likelihood.hpp"
#include "postadj/condex/pairwise.hpp"
#include "postadj/condex/panel_io.hpp"
#include "postadj/condex/pit.hpp"
#include "postadj/condex/self_inconsistency.hpp"
#include "postadj/condex/simulate.hpp"
#include "postadj/errors.hpp"
#include "postadj/sandwich.hpp"

using namespace postadj;
using namespace postadj::condex;

namespace {

// Dense MVN density written out independently of the library: explicit
// Matérn 3/2 correlation, full LU inverse and determinant.
double oracle_loglik(const Params& p, const std::vector<Site>& xy, const Eigen::VectorXd& y, std::size_t s0) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < xy.size(); ++k) if (k != s0) idx.push_back(k);
  const auto m = static_cast<Eigen::Index>(idx.size());
  auto dist = [&](std::size_t a, std::size_t b) { return std::hypot(xy[a][0] - xy[b][0], xy[a][1] - xy[b][1]); };
  Eigen::MatrixXd cov(m, m);
  Eigen::VectorXd mean(m), yy(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double di = dist(idx[i], s0);
    mean(i) = y(s0) * std::exp(-std::pow(di / p.lambda, p.kappa));
    yy(i) = y(idx[i]);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double dj = dist(idx[j], s0);
      const double bi = p.sigma_b * std::sqrt(1.0 - std::exp(-2.0 * di / p.rho_b));
      const double bj = p.sigma_b * std::sqrt(1.0 - std::exp(-2.0 * dj / p.rho_b));
      const double h = std::sqrt(3.0) * dist(idx[i], idx[j]) / p.rho_z * 2.0;  // sqrt(8 nu) d / rho with nu = 3/2
      const double r = (1.0 + h) * std::exp(-h);
      cov(i, j) = bi * bj * r + (i == j ? 1.0 / p.tau : 0.0);
    }
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  const Eigen::VectorXd r = yy - mean;
  return -0.5 * (static_cast<double>(m) * std::log(2.0 * M_PI) + std::log(lu.determinant()) +
                 r.dot(lu.inverse() * r));
}

}  // namespace

TEST_CASE("a_fn and b_fn closed forms") {
  Params p;
  CHECK(a_fn(0.0, 5.0, p) == doctest::Approx(5.0));
  CHECK(a_fn(p.lambda, 1.0, p) == doctest::Approx(std::exp(-1.0)));
  CHECK(a_fn(1e6, 5.0, p) == doctest::Approx(0.0));
  CHECK(b_fn(0.0, p) == 0.0);
  CHECK(b_fn(1e6, p) == doctest::Approx(p.sigma_b));
  CHECK(b_fn(p.rho_b / 2.0, p) == doctest::Approx(p.sigma_b * std::sqrt(1.0 - std::exp(-1.0))));
  CHECK_THROWS_AS(a_fn(-1.0, 5.0, p), NumericDomainError);
  CHECK(laplace_quantile(0.9975) == doctest::Approx(std::log(200.0)));
  CHECK(laplace_quantile(0.95) == doctest::Approx(std::log(10.0)));
}

TEST_CASE("condex_loglik matches an independent dense oracle") {
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  Params p;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<Site> xy;
    for (int k = 0; k < 6; ++k) xy.push_back({u(rng), u(rng)});
    Eigen::VectorXd y(6);
    for (int k = 0; k < 6; ++k) y(k) = u(rng) / 4.0;
    y(2) = 5.5 + u(rng) / 10.0;
    const double lib = condex_loglik(p, SiteSet(xy), y, 2);
    CHECK(std::abs(lib - oracle_loglik(p, xy, y, 2)) < 1e-10 * std::max(1.0, std::abs(lib)));
  }
}

TEST_CASE("condex_loglik one site and limits") {
  Params p;
  const SiteSet sites({{0.0, 0.0}, {3.0, 4.0}});
  Eigen::VectorXd y(2);
  y << 6.0, 4.2;
  const double mean = a_fn(5.0, 6.0, p);
  const double var = b_fn(5.0, p) * b_fn(5.0, p) + 1.0 / p.tau;
  const double oracle = -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (y(1) - mean) * (y(1) - mean) / var;
  CHECK(condex_loglik(p, sites, y, 0) == doctest::Approx(oracle).epsilon(1e-12));

  // far site: mean vanishes and the variance approaches sigma_b^2 + 1/tau
  const SiteSet far({{0.0, 0.0}, {1e5, 0.0}});
  const double v = p.sigma_b * p.sigma_b + 1.0 / p.tau;
  CHECK(condex_loglik(p, far, y, 0) ==
        doctest::Approx(-0.5 * std::log(2.0 * M_PI * v) - 0.5 * y(1) * y(1) / v).epsilon(1e-10));

  // sigma_b -> 0: independent N(a, 1/tau)
  Params q = p;
  q.sigma_b = 1e-12;
  const SiteSet three({{0.0, 0.0}, {1.0, 0.0}, {0.0, 2.0}});
  Eigen::VectorXd y3(3);
  y3 << 6.0, 5.0, 4.0;
  double indep = 0.0;
  for (int k = 1; k < 3; ++k) {
    const double r = y3(k) - a_fn(three.distance(0, k), 6.0, q);
    indep += -0.5 * std::log(2.0 * M_PI / q.tau) - 0.5 * q.tau * r * r;
  }
  CHECK(condex_loglik(q, three, y3, 0) == doctest::Approx(indep).epsilon(1e-9));
}

TEST_CASE("condex_composite equals a hand-built double sum") {
  const SiteSet sites = SiteSet::grid(3, 2, 2.0);
  const double t = 1.0;
  Eigen::MatrixXd data(4, 6);
  data << 2.0, 0.5, 0.1, 0.3, -0.2, 1.4,
          0.1, 1.5, 0.9, 0.7, 0.2, 0.4,
          3.0, 2.5, 1.2, 0.8, 0.9, 0.3,
          0.2, 0.1, 0.0, -0.5, 0.1, 0.2;
  const Design design = make_design(sites, t, {0, 1}, 0.0);
  const ParamMap map = ParamMap::free_rho_b();
  const Params p;
  const Eigen::VectorXd theta = map.to_theta(p);
  double sum = 0.0;
  for (std::size_t s0 : {0u, 1u}) {
    for (Eigen::Index j = 0; j < data.rows(); ++j) {
      if (data(j, s0) > t) sum += condex_loglik(p, sites, data.row(j).transpose(), s0);
    }
  }
  const CompositeLikelihood cl = condex_composite(design, data, map);
  CHECK(cl.num_terms() == 4);
  CHECK(cl.value(theta) == doctest::Approx(sum).epsilon(1e-12));
  CHECK(cl.term_values(theta).sum() == doctest::Approx(sum).epsilon(1e-12));
  const CompositeLikelihood plain = condex_composite(design, data, map, {}, {false});
  CHECK(plain.value(theta) == doctest::Approx(sum).epsilon(1e-12));

  // one conditioning site reduces to the single-site sum
  const Design one = make_design(sites, t, {1}, 0.0);
  double single = 0.0;
  for (Eigen::Index j = 0; j < data.rows(); ++j) {
    if (data(j, 1) > t) single += condex_loglik(p, sites, data.row(j).transpose(), 1);
  }
  CHECK(condex_composite(one, data, map).value(theta) == doctest::Approx(single).epsilon(1e-12));

  Eigen::MatrixXd low = Eigen::MatrixXd::Zero(4, 6);
  CHECK_THROWS_AS(condex_composite(design, low, map), ConfigError);
}

TEST_CASE("condex_composite handles missing values per term") {
  const SiteSet sites = SiteSet::grid(3, 1, 1.0);
  Eigen::MatrixXd data(2, 3);
  data << 2.0, 1.0, std::nan(""),
          3.0, 0.5, 0.2;
  const Design design = make_design(sites, 1.5, {0}, 0.0);
  const ParamMap map = ParamMap::free_rho_b();
  const Params p;
  const double full = condex_loglik(p, sites, data.row(1).transpose(), 0);
  const double part = condex_loglik(p, sites, data.row(0).transpose(), 0, {1});
  CHECK(condex_composite(design, data, map).value(map.to_theta(p)) == doctest::Approx(full + part).epsilon(1e-12));
}

TEST_CASE("fixed rho_b map") {
  const ParamMap m = ParamMap::fixed_rho_b(3.0);
  CHECK(m.layout().size() == 5);
  Eigen::VectorXd th(5);
  th << 10, 0.5, 2, 12, 20;
  const Params p = m(th);
  CHECK(p.rho_b == 3.0);
  CHECK(p.rho_z == 12.0);
  CHECK((m.to_theta(p) - th).norm() == 0.0);
}

TEST_CASE("single-site simulation moments") {
  Params p;
  const SiteSet sites({{0.0, 0.0}, {5.0, 0.0}, {0.0, 12.0}});
  const double t = std::log(200.0);
  const SpatialSampler model(p, sites, t);
  Rng rng(3);
  const std::size_t n = 100000;
  const Eigen::MatrixXd x = simulate_single_site(model, 0, n, rng);
  CHECK((x.col(0).array() > t).all());
  for (int k : {1, 2}) {
    const double d = sites.distance(0, k);
    // E[a(d, Y0)] with Y0 = t + Exp(1)
    const double mean = (t + 1.0) * std::exp(-std::pow(d / p.lambda, p.kappa));
    const Eigen::ArrayXd resid = x.col(k).array() - a_fn(d, 1.0, p) * x.col(0).array();
    const double var = b_fn(d, p) * b_fn(d, p) + 1.0 / p.tau;
    const double se = std::sqrt(var + std::pow(a_fn(d, 1.0, p), 2)) / std::sqrt(double(n));
    CHECK(std::abs(x.col(k).mean() - mean) < 3.0 * se);
    const double rv = (resid - resid.mean()).square().mean();
    CHECK(std::abs(rv / var - 1.0) < 0.05);
  }
}

TEST_CASE("bivariate self-inconsistency quadrature and simulators") {
  const SelfInconsistency si = self_inconsistency_demo({0.0, 1.0, 0.9, 0.8, 4.0});
  CHECK(si.converged);
  CHECK(si.p_keef == doctest::Approx(0.17).epsilon(0.005 / 0.17));
  CHECK(si.p_wadsworth == doctest::Approx(0.37).epsilon(0.005 / 0.37));
  CHECK(si.p_wadsworth > si.p_keef);

  const SelfInconsistency comon = self_inconsistency_demo({0.0, 1e-6, 1.0, 0.0, 4.0});
  CHECK(comon.p_keef == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(comon.p_wadsworth == doctest::Approx(1.0).epsilon(1e-6));

  const BivariateSampler model(0.0, 1.0, 0.9, 0.8, 4.0);
  Rng rng(9);
  const std::size_t n = 100000;
  for (auto path : {GlobalPath::wadsworth, GlobalPath::keef}) {
    const GlobalSampleBatch b = path == GlobalPath::keef ? simulate_global_keef(model, n, rng)
                                                         : simulate_global_wadsworth(model, n, rng);
    CHECK(b.exceed.rowwise().any().all());
    const double both = static_cast<double>(b.exceed.rowwise().all().count()) / double(n);
    const double target = path == GlobalPath::keef ? si.p_keef : si.p_wadsworth;
    CHECK(std::abs(both - target) < 0.02);
  }
}

TEST_CASE("one-site global samplers reduce to the Laplace tail") {
  const SpatialSampler model(Params{}, SiteSet({{0.0, 0.0}}), 2.0);
  Rng rng(5);
  for (auto path : {GlobalPath::wadsworth, GlobalPath::keef}) {
    const GlobalSampleBatch b = path == GlobalPath::keef ? simulate_global_keef(model, 10000, rng)
                                                         : simulate_global_wadsworth(model, 10000, rng);
    std::vector<double> v(b.replicates.data(), b.replicates.data() + b.replicates.size());
    std::sort(v.begin(), v.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double f = 1.0 - std::exp(-(v[i] - 2.0));
      ks = std::max({ks, std::abs(f - double(i) / v.size()), std::abs(f - double(i + 1) / v.size())});
    }
    CHECK(ks < 0.02);
  }
}

TEST_CASE("Keef max-site distribution follows the pilot weights") {
  Params p;
  const SiteSet sites({{0.0, 0.0}, {3.0, 0.0}, {20.0, 5.0}});
  const SpatialSampler model(p, sites, std::log(200.0));
  Rng rng(21);
  const Eigen::VectorXd pm = keef_max_probs(model, 20000, rng);
  const GlobalSampleBatch b = simulate_global_keef(model, 20000, rng);
  for (Eigen::Index r = 0; r < b.replicates.rows(); ++r) {
    Eigen::Index arg;
    b.replicates.row(r).maxCoeff(&arg);
    CHECK(static_cast<std::size_t>(arg) == b.conditioned_on[r]);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const double share = double(std::count(b.conditioned_on.begin(), b.conditioned_on.end(), i)) / 20000.0;
    CHECK(std::abs(share - pm(i) / pm.sum()) < 0.03);
  }
}

TEST_CASE("Laplace PIT") {
  Rng rng(4);
  std::exponential_distribution<double> e(1.0);
  const SiteSet sites = SiteSet::grid(2, 1, 10.0);
  Eigen::MatrixXd x(2001, 2);
  for (Eigen::Index j = 0; j < x.rows(); ++j) for (int k = 0; k < 2; ++k) x(j, k) = e(rng);
  x(5, 1) = std::nan("");
  const Eigen::MatrixXd y = laplace_pit(x, sites, {0.0, 10});
  CHECK(std::isnan(y(5, 1)));
  // monotone within a site, and the median maps to 0
  std::vector<Eigen::Index> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x(a, 0) < x(b, 0); });
  for (std::size_t k = 1; k < order.size(); ++k) CHECK(y(order[k], 0) > y(order[k - 1], 0));
  CHECK(y(order[1000], 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(laplace_pit(x.topRows(5), sites, {0.0, 10}), ConfigError);
  // pooling over both sites halves nothing but doubles the counts
  const Eigen::MatrixXd pooled = laplace_pit(x, sites, {10.0, 10});
  CHECK(pooled.col(0).allFinite());
}

TEST_CASE("panel csv round trip") {
  const SiteSet sites({{0.5, 1.0}, {2.0, -3.25}});
  Eigen::MatrixXd v(2, 2);
  v << 1.0, std::nan(""), -0.125, 3.5;
  const Panel p = make_panel(sites, v);
  std::stringstream ss;
  write_panel_csv(ss, p);
  const Panel q = read_panel_csv(ss);
  CHECK(q.site_ids == p.site_ids);
  CHECK(q.times == p.times);
  CHECK(q.sites.coords() == sites.coords());
  CHECK(std::isnan(q.values(0, 1)));
  CHECK(q.values(1, 0) == -0.125);
  std::stringstream bad("site-id,x-km,y-km,time-index,value\n0,1,1,0,1\n0,2,1,1,1\n");
  CHECK_THROWS_AS(read_panel_csv(bad), ConfigError);
}

TEST_CASE("pairwise fits recover alpha and zeta") {
  Params p;
  p.rho_z = 1e-3;  // white-noise residuals
  const SiteSet sites = SiteSet::grid(4, 1, 6.0);
  const SpatialSampler model(p, sites, 1.0);
  Rng rng(8);
  const Eigen::MatrixXd x = simulate_single_site(model, 0, 4000, rng);
  Eigen::MatrixXd data = Eigen::MatrixXd::Constant(x.rows(), 4, -10.0);
  data = x;
  for (std::size_t k = 1; k < 4; ++k) {
    const double d = sites.distance(0, k);
    const Eigen::VectorXd y0 = data.col(0);
    const Eigen::VectorXd y1 = data.col(k);
    const PairwiseEstimate e = fit_pair(y0, y1, d, PairwiseVariant::fix_beta_gamma);
    CHECK(e.converged);
    const double zeta = std::sqrt(b_fn(d, p) * b_fn(d, p) + 1.0 / p.tau);
    CHECK(std::abs(e.alpha - a_fn(d, 1.0, p)) < 0.05);
    CHECK(std::abs(e.zeta - zeta) < 0.05 * zeta);
  }
  Eigen::VectorXd y0(3), y1(3);
  y0 << 2, 3, 4;
  y1 << 1, 2, 3;
  CHECK_THROWS_AS(fit_pair(y0, y1, 0.0, PairwiseVariant::free), ConfigError);
}

TEST_CASE("sandwich pieces run on the condex composite") {
  Params p;
  const SiteSet sites = SiteSet::grid(4, 4, 2.0);
  const SpatialSampler model(p, sites, std::log(10.0));
  Rng rng(2);
  const GlobalSampleBatch b = simulate_global_wadsworth(model, 200, rng);
  const Design design = make_design(sites, std::log(10.0), grid_subset(4, 4, 2), 5.0);
  const ParamMap map = ParamMap::free_rho_b();
  const CompositeLikelihood cl = condex_composite(design, b.replicates, map);
  const SandwichEstimate est = estimate_sandwich(cl, map.to_theta(p));
  CHECK(est.C.allFinite());
}
