#ifndef POSTADJ_CONDEX_PAIRWISE_HPP
#define POSTADJ_CONDEX_PAIRWISE_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "postadj/condex/model.hpp"
#include "postadj/rng.hpp"

namespace postadj::condex {

/// Which of (gamma, beta) are fixed at zero in
/// [Y(s1) | Y(s0) = y0 > t] = alpha y0 + gamma + zeta y0^beta Z.
enum class PairwiseVariant { fix_beta_gamma, fix_gamma, fix_beta, free };

/// Box constraints, enforced through a logistic reparametrisation.
struct PairwiseBounds {
  double alpha_lo = -1.0, alpha_hi = 1.0;
  double gamma_lo = -5.0, gamma_hi = 5.0;
  double zeta_lo = 0.0, zeta_hi = 10.0;
  double beta_lo = -1.0, beta_hi = 1.0;
};

struct PairwiseEstimate {
  std::size_t s0 = 0, s1 = 0;
  double distance = 0.0;
  std::size_t n = 0;  // exceedances used
  double alpha = 0.0, gamma = 0.0, zeta = 1.0, beta = 0.0;
  bool converged = false;
  std::string status;
};

/// Maximum likelihood fit of one pair. y0 must exceed the threshold; pairs
/// with zero distance are rejected.
PairwiseEstimate fit_pair(const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, double distance,
                          PairwiseVariant variant, const PairwiseBounds& bounds = {});

struct PairwiseOptions {
  std::size_t min_exceedances = 10;
  PairwiseBounds bounds;
};

/// Fits `n_pairs` random site pairs (s0, s1), s0 != s1, using rows where
/// data(., s0) > threshold and data(., s1) is observed. Pairs whose fit does not
/// converge or with too few exceedances are dropped.
std::vector<PairwiseEstimate> fit_pairwise(const Eigen::MatrixXd& data, const SiteSet& sites, double threshold,
                                           std::size_t n_pairs, PairwiseVariant variant, Rng& rng,
                                           const PairwiseOptions& opts = {});

/// Standardised residuals (y1 - alpha(d) y0) / zeta(d) for every exceedance
/// of every pair, using the parametric alpha(d) and zeta(d) of `p`.
std::vector<double> pairwise_residuals(const Eigen::MatrixXd& data, const SiteSet& sites, double threshold,
                                       const std::vector<PairwiseEstimate>& pairs, const Params& p);

struct AlphaZetaFit {
  double lambda = 0.0, kappa = 0.0, sigma = 0.0, rho_b = 0.0;
  bool converged = false;
};

/// White-noise MLE of (lambda, kappa, sigma, rho_b) in alpha(d) and zeta(d),
/// pooling the exceedances of all listed pairs.
AlphaZetaFit fit_alpha_zeta(const Eigen::MatrixXd& data, const SiteSet& sites, double threshold,
                            const std::vector<PairwiseEstimate>& pairs);

}  // namespace postadj::condex

#endif  // POSTADJ_CONDEX_PAIRWISE_HPP
