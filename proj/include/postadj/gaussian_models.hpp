#ifndef POSTADJ_GAUSSIAN_MODELS_HPP
#define POSTADJ_GAUSSIAN_MODELS_HPP

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "postadj/grid_gmrf.hpp"
#include "postadj/likelihoods.hpp"
#include "postadj/random_fields.hpp"
#include "postadj/rng.hpp"

namespace postadj {

/// log N(y; mean, L L^T) given the lower Cholesky factor L.
double mvn_logpdf_chol(const VectorXd& y, const VectorXd& mean, const MatrixXd& chol_lower);

/// One term per observation with N(mu, 1) density. Parameters: (mu).
CompositeLikelihood gaussian_fixed_var_loglik(const VectorXd& y);

/// One term per observation with N(mu, sigma^2) density. Parameters: (mu, sigma), sigma log-linked.
CompositeLikelihood gaussian_iid_loglik(const VectorXd& y);

VectorXd student_t_sample(double df, Eigen::Index n, Rng& rng);

using Blocks = std::vector<std::vector<std::size_t>>;

/// Partition of sites into an nbx x nby array of equal rectangular cells
/// covering [x_min, x_max] x [y_min, y_max]. Empty cells are dropped.
Blocks rectangular_blocks(const SiteSet& sites, double x_min, double x_max, double y_min,
                          double y_max, std::size_t nbx, std::size_t nby);

/// Block composite likelihood: one term per (block, replicate) with the dense
/// MVN density of the block's sites under Matérn(rho, sigma^2, nu) + I / tau.
/// `data` is replicates x sites. Parameters: (tau, rho, sigma), all log-linked.
CompositeLikelihood block_composite_gaussian(const SiteSet& sites, const MatrixXd& data,
                                             const Blocks& blocks, double nu);

/// Exact joint likelihood under the grid GMRF + nugget model, one term per
/// replicate: y ~ N(0, A Q^-1 A^T + I / tau). Evaluated through
/// P = Q + tau A^T A. Totals use the sufficient statistics sum y^T y and
/// sum (A^T y)(A^T y)^T, so large replicate counts are cheap.
/// Parameters: (tau, rho, sigma), all log-linked.
CompositeLikelihood gmrf_field_loglik(const GridGmrf& grid, const SiteSet& sites,
                                      const MatrixXd& data);

/// Parameter layout (tau, rho, sigma) shared by the Gaussian field models.
ParamLayout field_layout();

}  // namespace postadj

#endif  // POSTADJ_GAUSSIAN_MODELS_HPP
