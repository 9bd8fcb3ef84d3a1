#ifndef POSTADJ_RANDOM_FIELDS_HPP
#define POSTADJ_RANDOM_FIELDS_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "postadj/matrix_kit.hpp"
#include "postadj/rng.hpp"

namespace postadj {

/// Matérn parameters: variance, range (km) and fixed smoothness. The scale
/// kappa_m = sqrt(8 nu) / rho.
struct MaternParams {
  double sigma2 = 1.0;
  double rho = 1.0;
  double nu = 1.5;

  double kappa() const;
  void validate() const;
};

/// Matérn covariance at distance d. Half-integer smoothness 0.5/1.5/2.5 uses
/// the closed forms; other values go through the modified Bessel function.
double matern_cov(double d, const MaternParams& p);

/// Same value, always through std::cyl_bessel_k.
double matern_cov_bessel(double d, const MaternParams& p);

/// Unit-variance Matérn correlation.
double matern_corr(double d, double rho, double nu);

using Site = std::array<double, 2>;

class SiteSet {
 public:
  SiteSet() = default;
  explicit SiteSet(std::vector<Site> coords);

  /// nx * ny regular grid, row-major in x, starting at `origin`.
  static SiteSet grid(std::size_t nx, std::size_t ny, double spacing, Site origin = {0.0, 0.0});
  static SiteSet uniform(std::size_t n, double x_min, double x_max, double y_min, double y_max,
                         Rng& rng);

  std::size_t size() const { return coords_.size(); }
  const Site& operator[](std::size_t i) const { return coords_[i]; }
  const std::vector<Site>& coords() const { return coords_; }
  double distance(std::size_t i, std::size_t j) const;
  MatrixXd distance_matrix() const;
  SiteSet subset(const std::vector<std::size_t>& idx) const;
  bool has_duplicates() const;

 private:
  std::vector<Site> coords_;
};

struct FieldOptions {
  // Opt-in robustness for duplicate sites: adds jitter_rel * sigma2 to the
  // covariance diagonal instead of failing.
  bool jitter_duplicates = false;
  double jitter_rel = 1e-8;
};

MatrixXd matern_cov_matrix(const SiteSet& sites, const MaternParams& p);

/// n_reps x n_sites zero-mean draws with exact Matérn covariance (dense Cholesky).
/// Duplicate sites throw NotSpdError unless jitter is enabled.
MatrixXd sample_field(const SiteSet& sites, const MaternParams& p, Eigen::Index n_reps, Rng& rng,
                      const FieldOptions& opts = {});

/// Adds iid N(0, 1/tau) noise to every entry.
MatrixXd add_nugget(MatrixXd draws, double tau, Rng& rng);

/// Z(s; s0) = Z(s) - Z(s0) for each replicate row.
MatrixXd constrain_subtraction(MatrixXd draws, std::size_t s0);

using CorrFn = std::function<double(double)>;

/// Correlation between Z(s1; s0) and Z(s2; s0) for the subtraction-constrained
/// field, given |s1 - s0| = d1, |s2 - s0| = d2, |s1 - s2| = d12 and the
/// unconstrained autocorrelation r.
double subtraction_corr(double d1, double d2, double d12, const CorrFn& r);
double subtraction_corr(double d1, double d2, double d12, const MaternParams& p);

/// Elementwise b(s_i) * Z(s_i); b values must be non-negative.
MatrixXd constrain_by_b_modulation(MatrixXd draws, const VectorXd& b);

struct ConditionedField {
  MatrixXd cov;      // covariance of [Z | Z(s0) = 0]; row/column s0 are zero
  VectorXd mean;     // conditional mean (zero)
  VectorXd weights;  // regression weights Cov(Z, Z(s0)) / Var(Z(s0))
};

/// Dense Schur-complement conditioning on Z(s0) = 0.
ConditionedField constrain_conditioning(const SpdMatrix& cov, std::size_t s0);

}  // namespace postadj

#endif  // POSTADJ_RANDOM_FIELDS_HPP
