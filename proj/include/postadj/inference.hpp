#ifndef POSTADJ_INFERENCE_HPP
#define POSTADJ_INFERENCE_HPP

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "postadj/likelihoods.hpp"
#include "postadj/optimize.hpp"
#include "postadj/params.hpp"
#include "postadj/priors.hpp"
#include "postadj/rng.hpp"

namespace postadj {

/// Composite likelihood plus priors. The unconstrained-scale density includes
/// the link Jacobians, so it is the density samplers and optimizers target.
class Posterior {
 public:
  Posterior(const CompositeLikelihood& cl, PriorSet priors);

  const ParamLayout& layout() const { return cl_->layout(); }
  const CompositeLikelihood& likelihood() const { return *cl_; }
  const PriorSet& priors() const { return priors_; }

  /// eval_composite + log prior, natural scale.
  double log_posterior(const Eigen::VectorXd& natural) const;
  double log_posterior_unconstrained(const Eigen::VectorXd& u) const;

  ScalarFn unconstrained_fn() const;

 private:
  const CompositeLikelihood* cl_;
  PriorSet priors_;
};

double log_posterior(const CompositeLikelihood& cl, const PriorSet& priors, const ParamVector& theta);

struct ModeResult {
  Eigen::VectorXd theta;  // natural scale
  Eigen::VectorXd u;      // unconstrained scale
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status;
};

ModeResult find_mode(const ScalarFn& logpost_u, const ParamLayout& layout,
                     const Eigen::VectorXd& theta_init, const OptimOptions& opts = {});

/// Composite-likelihood maximum first, then the posterior mode started from it.
struct TwoStepMode {
  ModeResult mle;
  ModeResult mode;
};

TwoStepMode find_mode_two_step(const Posterior& post, const Eigen::VectorXd& theta_init,
                               const OptimOptions& opts = {});

/// Draws with provenance. `draws_u` holds the same draws on the unconstrained
/// scale. `source_checksum` records the checksum of the draws this set was
/// derived from (equal to checksum() for sampler output).
struct PosteriorDraws {
  ParamLayout layout;
  Eigen::MatrixXd draws;    // n_s x p, natural scale
  Eigen::MatrixXd draws_u;  // n_s x p, unconstrained scale
  Eigen::VectorXd mode;     // natural scale
  std::string sampler;
  std::uint64_t seed = 0;
  std::uint64_t source_checksum = 0;

  Eigen::Index size() const { return draws.rows(); }
  std::uint64_t checksum() const;
};

/// FNV-1a over the raw bytes of a matrix.
std::uint64_t matrix_checksum(const Eigen::MatrixXd& m);

PosteriorDraws make_draws(const ParamLayout& layout, Eigen::MatrixXd draws_u,
                          const Eigen::VectorXd& mode_u, std::string sampler, std::uint64_t seed);

/// Gaussian draws N(mode, (-Hess)^-1) on the unconstrained scale. Throws
/// NotSpdError when the negative Hessian is clearly indefinite (use MCMC).
PosteriorDraws laplace_sample(const ScalarFn& logpost_u, const ParamLayout& layout,
                              const Eigen::VectorXd& mode_u, Eigen::Index n_s, Rng& rng,
                              std::uint64_t seed = 0);

struct McmcOptions {
  Eigen::Index burn_in = 2000;
  double target_acceptance = 0.234;
  double initial_scale = 0.1;
  Eigen::MatrixXd proposal_cov;  // optional starting proposal covariance
};

struct McmcResult {
  PosteriorDraws draws;
  double acceptance = 0.0;  // after burn-in
  bool tuning_failed = false;
};

/// Adaptive random-walk Metropolis on the unconstrained scale. Scale and
/// proposal covariance adapt during burn-in only.
McmcResult mcmc_sample(const ScalarFn& logpost_u, const ParamLayout& layout,
                       const Eigen::VectorXd& u_init, Eigen::Index n_s, Rng& rng,
                       const McmcOptions& opts = {}, std::uint64_t seed = 0);

struct CredibleInterval {
  double level = 0.95;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  bool contains(Eigen::Index k, double value) const {
    return lower(k) <= value && value <= upper(k);
  }
};

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double prob);

/// Equal-tailed intervals from natural-scale draws.
CredibleInterval credible_interval(const PosteriorDraws& draws, double level);
CredibleInterval credible_interval(const Eigen::MatrixXd& draws, double level);

struct LogScore {
  double value = 0.0;
  bool all_neg_inf = false;
};

/// log( mean_i exp(loglik(theta_i)) ) over the natural-scale draws.
LogScore log_score(const std::function<double(const Eigen::VectorXd&)>& loglik,
                   const Eigen::MatrixXd& draws);

double log_sum_exp(const Eigen::VectorXd& v);

}  // namespace postadj

#endif  // POSTADJ_INFERENCE_HPP
