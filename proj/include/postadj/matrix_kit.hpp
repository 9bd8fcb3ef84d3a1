#ifndef POSTADJ_MATRIX_KIT_HPP
#define POSTADJ_MATRIX_KIT_HPP

#include <Eigen/Dense>

#include "postadj/errors.hpp"
#include "postadj/rng.hpp"

namespace postadj {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Symmetric positive-definite matrix. Construction verifies symmetry (relative
/// tolerance tol::symmetry_rel), finiteness and positive definiteness, and
/// throws NotSpdError / NumericDomainError otherwise. The stored matrix is the
/// exact symmetric part of the input.
class SpdMatrix {
 public:
  explicit SpdMatrix(const MatrixXd& m);

  static SpdMatrix identity(Eigen::Index dim);
  static SpdMatrix diagonal(const VectorXd& d);

  Eigen::Index dim() const { return m_.rows(); }
  const MatrixXd& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  MatrixXd inverse() const;

 private:
  MatrixXd m_;
};

/// Result of clamping eigenvalues from below at `rel_floor * max eigenvalue`.
struct FlooredSpd {
  SpdMatrix matrix;
  bool floored = false;
};

/// Symmetrizes `m` and clamps its spectrum; used for estimated sandwich pieces
/// that may be indefinite from short series. Throws NumericDomainError on
/// non-finite input and NotSpdError when the largest eigenvalue is not positive.
FlooredSpd floor_eigenvalues(const MatrixXd& m, double rel_floor);

/// Factor M with M^T M = source. M is the symmetric root U diag(sqrt s) U^T.
struct MatrixSqrtFactor {
  SpdMatrix source;
  MatrixXd factor;
  bool floored = false;  // eigenvalues were clamped at tol::sqrt_eig_floor_rel
};

MatrixSqrtFactor spd_sqrt(const SpdMatrix& a, Warnings* warnings = nullptr);

/// Cholesky solve of a x = b.
MatrixXd spd_solve(const SpdMatrix& a, const MatrixXd& b);

/// n independent draws (rows) from N(mean, cov). Deterministic given `rng` state.
MatrixXd mvn_sample(const VectorXd& mean, const SpdMatrix& cov, Eigen::Index n, Rng& rng);

/// Fill `out` with iid standard normals from `rng`.
void fill_standard_normal(Eigen::Ref<MatrixXd> out, Rng& rng);

double relative_frobenius(const MatrixXd& a, const MatrixXd& reference);

/// Symmetric part (A + A^T)/2.
inline MatrixXd symmetrize(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace postadj

#endif  // POSTADJ_MATRIX_KIT_HPP
