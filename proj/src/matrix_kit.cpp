#include "postadj/matrix_kit.hpp"

#include <cmath>
#include <random>
#include <string>

#include "postadj/constants.hpp"

namespace postadj {

namespace {

void require_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericDomainError(std::string(what) + ": non-finite entries");
  }
}

}  // namespace

SpdMatrix::SpdMatrix(const MatrixXd& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw DimensionError("SpdMatrix: matrix must be square and non-empty");
  }
  require_finite(m, "SpdMatrix");
  const double scale = m.norm();
  const double asym = (m - m.transpose()).norm();
  if (asym > tol::symmetry_rel * std::max(scale, 1e-300)) {
    throw NotSpdError("SpdMatrix: matrix is not symmetric");
  }
  m_ = symmetrize(m);
  Eigen::LLT<MatrixXd> llt(m_);
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("SpdMatrix: matrix is not positive definite");
  }
}

SpdMatrix SpdMatrix::identity(Eigen::Index dim) {
  return SpdMatrix(MatrixXd::Identity(dim, dim));
}

SpdMatrix SpdMatrix::diagonal(const VectorXd& d) {
  return SpdMatrix(MatrixXd(d.asDiagonal()));
}

MatrixXd SpdMatrix::inverse() const {
  Eigen::LLT<MatrixXd> llt(m_);
  return symmetrize(llt.solve(MatrixXd::Identity(dim(), dim())));
}

FlooredSpd floor_eigenvalues(const MatrixXd& m, double rel_floor) {
  require_finite(m, "floor_eigenvalues");
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError("floor_eigenvalues: matrix must be square and non-empty");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  VectorXd ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0)) {
    throw NotSpdError("floor_eigenvalues: no positive eigenvalue");
  }
  const double floor = rel_floor * top;
  bool floored = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < floor) {
      ev(i) = floor;
      floored = true;
    }
  }
  if (!floored) {
    return {SpdMatrix(symmetrize(m)), false};
  }
  MatrixXd rebuilt = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return {SpdMatrix(symmetrize(rebuilt)), true};
}

MatrixSqrtFactor spd_sqrt(const SpdMatrix& a, Warnings* warnings) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a.matrix());
  if (es.info() != Eigen::Success) {
    throw NumericDomainError("spd_sqrt: eigendecomposition failed");
  }
  VectorXd ev = es.eigenvalues();
  const double floor = tol::sqrt_eig_floor_rel * ev.maxCoeff();
  bool floored = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < floor) {
      ev(i) = floor;
      floored = true;
    }
  }
  if (floored && warnings) {
    warnings->push_back("spd_sqrt: near-singular input, eigenvalues clamped at " +
                        std::to_string(floor));
  }
  const MatrixXd& u = es.eigenvectors();
  MatrixXd root = u * ev.cwiseSqrt().asDiagonal() * u.transpose();
  return {a, symmetrize(root), floored};
}

MatrixXd spd_solve(const SpdMatrix& a, const MatrixXd& b) {
  if (b.rows() != a.dim()) {
    throw DimensionError("spd_solve: right-hand side has wrong number of rows");
  }
  Eigen::LLT<MatrixXd> llt(a.matrix());
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("spd_solve: Cholesky factorization failed");
  }
  return llt.solve(b);
}

void fill_standard_normal(Eigen::Ref<MatrixXd> out, Rng& rng) {
  std::normal_distribution<double> norm(0.0, 1.0);
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      out(i, j) = norm(rng);
    }
  }
}

MatrixXd mvn_sample(const VectorXd& mean, const SpdMatrix& cov, Eigen::Index n, Rng& rng) {
  if (mean.size() != cov.dim()) {
    throw DimensionError("mvn_sample: mean and covariance dimensions differ");
  }
  if (n < 1) {
    throw DimensionError("mvn_sample: need at least one draw");
  }
  Eigen::LLT<MatrixXd> llt(cov.matrix());
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("mvn_sample: covariance is not positive definite");
  }
  MatrixXd z(cov.dim(), n);
  fill_standard_normal(z, rng);
  MatrixXd draws = (llt.matrixL() * z).transpose();
  draws.rowwise() += mean.transpose();
  return draws;
}

double relative_frobenius(const MatrixXd& a, const MatrixXd& reference) {
  return (a - reference).norm() / reference.norm();
}

}  // namespace postadj
