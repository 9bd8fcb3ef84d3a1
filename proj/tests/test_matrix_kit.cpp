#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "postadj/constants.hpp"
#include "postadj/errors.hpp"
#include "postadj/matrix_kit.hpp"
#include "postadj/sandwich.hpp"

using namespace postadj;

TEST_CASE("SpdMatrix validation") {
  Eigen::Matrix2d a;
  a << 2.0, 0.5, 0.5, 1.0;
  CHECK(SpdMatrix(a).dim() == 2);
  Eigen::Matrix2d asym = a;
  asym(0, 1) = 0.6;
  CHECK_THROWS_AS(SpdMatrix{asym}, NotSpdError);
  Eigen::Matrix2d indef;
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(SpdMatrix{indef}, NotSpdError);
  Eigen::Matrix2d nan = a;
  nan(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(SpdMatrix{nan}, NumericDomainError);
  CHECK((SpdMatrix(a).inverse() * a - Eigen::Matrix2d::Identity()).norm() < 1e-14);
}

TEST_CASE("square-root factor reproduces its source") {
  std::mt19937_64 rng(3);
  for (Eigen::Index p = 1; p <= 8; ++p) {
    const SpdMatrix s(oracle::random_spd(p, rng));
    const MatrixSqrtFactor f = spd_sqrt(s);
    CHECK(!f.floored);
    CHECK(relative_frobenius(f.factor.transpose() * f.factor, s.matrix()) < tol::sqrt_factor_rel);
    CHECK((f.factor - f.factor.transpose()).norm() < 1e-12 * f.factor.norm());
  }
}

TEST_CASE("eigenvalue floor") {
  Eigen::Matrix2d m;
  m << 1.0, 0.0, 0.0, -1e-3;
  const FlooredSpd f = floor_eigenvalues(m, 1e-10);
  CHECK(f.floored);
  CHECK(f.matrix(1, 1) == doctest::Approx(1e-10));
  CHECK_THROWS_AS(floor_eigenvalues(-Eigen::Matrix2d::Identity(), 1e-10), NotSpdError);
  CHECK(!floor_eigenvalues(Eigen::Matrix2d::Identity(), 1e-10).floored);
}

TEST_CASE("build_C satisfies the defining equation") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(2, 8);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index p = dim(rng);
    const SpdMatrix h(oracle::random_spd(p, rng));
    const SpdMatrix info(oracle::random_spd(p, rng));
    const Eigen::MatrixXd c = build_C(h, info);
    const Eigen::MatrixXd target = info.matrix().inverse();
    worst = std::max(worst, (c * h.matrix().inverse() * c.transpose() - target).norm() / target.norm());
  }
  CHECK(worst < tol::adjustment_defining_rel);
}

TEST_CASE("build_C is the identity when the information equals H") {
  std::mt19937_64 rng(5);
  const SpdMatrix h(oracle::random_spd(4, rng));
  CHECK((build_C(h, h) - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-10);
  // scalar case: C = sqrt(H / I)
  const Eigen::MatrixXd c = build_C(SpdMatrix::diagonal(Eigen::Vector2d(4.0, 1.0)), SpdMatrix::diagonal(Eigen::Vector2d(1.0, 9.0)));
  CHECK(c(0, 0) == doctest::Approx(2.0));
  CHECK(c(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(build_C(SpdMatrix::identity(2), SpdMatrix::identity(3)), DimensionError);
}

TEST_CASE("mvn_sample moments and determinism") {
  Eigen::Matrix2d cov;
  cov << 2.0, 0.6, 0.6, 0.5;
  const Eigen::Vector2d mean(1.0, -2.0);
  Rng a = make_stream(9, 0), b = make_stream(9, 0);
  const Eigen::MatrixXd x = mvn_sample(mean, SpdMatrix(cov), 200000, a);
  CHECK(x == mvn_sample(mean, SpdMatrix(cov), 200000, b));
  const Eigen::Vector2d m = x.colwise().mean();
  const Eigen::MatrixXd c = (x.rowwise() - m.transpose()).transpose() * (x.rowwise() - m.transpose()) / 199999.0;
  CHECK((m - mean).norm() < 0.02);
  CHECK(relative_frobenius(c, cov) < 0.02);
}

TEST_CASE("spd_solve") {
  std::mt19937_64 rng(8);
  const SpdMatrix a(oracle::random_spd(5, rng));
  const Eigen::MatrixXd b = Eigen::MatrixXd::Random(5, 3);
  CHECK((a.matrix() * spd_solve(a, b) - b).norm() < 1e-10);
}
