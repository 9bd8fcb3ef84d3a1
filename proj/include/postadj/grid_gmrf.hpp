#ifndef POSTADJ_GRID_GMRF_HPP
#define POSTADJ_GRID_GMRF_HPP

#include <Eigen/Dense>

#include "postadj/random_fields.hpp"

namespace postadj {

/// Regular-grid stand-in for an SPDE mesh. The grid covers the data box
/// extended by `extension_cells` on each side; `spacing` is the coarseness dial.
struct GridGmrfSpec {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  double spacing = 1.0;
  int extension_cells = 0;
};

/// Gaussian Markov random field with the nu = 1 SPDE precision on a regular
/// grid: Q = tau0^2 (kappa^4 C + 2 kappa^2 G + G C^-1 G), lumped mass
/// C = h^2 I, G the 5-point graph Laplacian with reflecting boundary, and
/// tau0^2 = 1 / (4 pi kappa^2 sigma^2) so that interior nodes have variance
/// close to sigma^2.
class GridGmrf {
 public:
  explicit GridGmrf(const GridGmrfSpec& spec);

  const GridGmrfSpec& spec() const { return spec_; }
  Eigen::Index nx() const { return nx_; }
  Eigen::Index ny() const { return ny_; }
  Eigen::Index num_nodes() const { return nx_ * ny_; }
  Site node(Eigen::Index i) const;

  /// Precision for range rho and standard deviation sqrt(sigma2). Requires nu == 1.
  MatrixXd precision(const MaternParams& p) const;

  /// Bilinear interpolation weights from grid nodes to sites (sites x nodes).
  MatrixXd projection(const SiteSet& sites) const;

  /// True when the boundary extension is at least two correlation ranges.
  bool extension_covers(double rho) const;

 private:
  GridGmrfSpec spec_;
  Eigen::Index nx_ = 0;
  Eigen::Index ny_ = 0;
  double x0_ = 0.0;
  double y0_ = 0.0;
  MatrixXd stiffness_;
  MatrixXd stiffness_sq_;
};

}  // namespace postadj

#endif  // POSTADJ_GRID_GMRF_HPP
