#ifndef POSTADJ_CONDEX_LIKELIHOOD_HPP
#define POSTADJ_CONDEX_LIKELIHOOD_HPP

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "postadj/condex/model.hpp"
#include "postadj/likelihoods.hpp"

namespace postadj::condex {

/// Covariance of the non-conditioning sites `used` given conditioning site s0:
/// b_i b_j r(|s_i - s_j|; rho_z, nu_z) + I / tau.
Eigen::MatrixXd conditional_cov(const Params& p, const SiteSet& sites, std::size_t s0,
                                const std::vector<std::size_t>& used);

/// Log-density of y at the `used` sites given y(s0) = y0: multivariate normal
/// with mean a(d_i, y0) and conditional_cov. The s0 entry is excluded.
double condex_loglik(const Params& p, const SiteSet& sites, const Eigen::VectorXd& y,
                     std::size_t s0, const std::vector<std::size_t>& used);

/// Same, using every site other than s0.
double condex_loglik(const Params& p, const SiteSet& sites, const Eigen::VectorXd& y,
                     std::size_t s0);

struct CompositeOptions {
  // Sum the complete-data terms of each conditioning site through
  // sufficient statistics when only the total is needed.
  bool moment_totals = true;
};

/// Composite likelihood over the design's conditioning sites: one term per
/// (conditioning site, row j) with y_j(s0) > threshold, unit = s0 and time =
/// times[j] (row index when `times` is empty). `data` is times x sites; NaN
/// marks a missing value, which drops that site from the affected term only.
CompositeLikelihood condex_composite(const Design& design, const Eigen::MatrixXd& data,
                                     const ParamMap& map, const std::vector<std::size_t>& times = {},
                                     const CompositeOptions& opts = {});

/// Number of threshold exceedances per conditioning site.
std::vector<std::size_t> exceedance_counts(const Design& design, const Eigen::MatrixXd& data);

}  // namespace postadj::condex

#endif  // POSTADJ_CONDEX_LIKELIHOOD_HPP
