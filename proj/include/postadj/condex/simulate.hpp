#ifndef POSTADJ_CONDEX_SIMULATE_HPP
#define POSTADJ_CONDEX_SIMULATE_HPP

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "postadj/condex/model.hpp"
#include "postadj/rng.hpp"

namespace postadj::condex {

/// A family of single-site conditional models, one per site i: the law of the
/// whole vector X given X_i = y0 for y0 above the threshold. Margins are
/// assumed to have an exponential upper tail, so X_i - t | X_i > t ~ Exp(1).
class ConditionalSampler {
 public:
  virtual ~ConditionalSampler() = default;
  virtual std::size_t dim() const = 0;
  virtual double threshold() const = 0;
  /// Marginal P(X_i > t).
  virtual double exceed_prob(std::size_t i) const = 0;
  /// One draw of X given X_i = y0.
  virtual Eigen::VectorXd sample_given(std::size_t i, double y0, Rng& rng) const = 0;
};

/// The spatial model X(s) = a(d, y0) + b(d) Z(s) + eps(s), with d = |s - s_i|,
/// Z a unit-variance Matérn field and eps ~ N(0, 1/tau) away from s_i.
/// Laplace margins: P(X_i > t) = exp(-t) / 2 at every site.
class SpatialSampler : public ConditionalSampler {
 public:
  SpatialSampler(const Params& p, SiteSet sites, double threshold);
  /// Non-stationary variant: the conditional model at site i uses per_site[i]
  /// for a, b and the nugget. The residual field (rho_z, nu_z) must be shared.
  SpatialSampler(const std::vector<Params>& per_site, SiteSet sites, double threshold);

  std::size_t dim() const override { return sites_.size(); }
  double threshold() const override { return threshold_; }
  double exceed_prob(std::size_t) const override;
  Eigen::VectorXd sample_given(std::size_t i, double y0, Rng& rng) const override;

  const SiteSet& sites() const { return sites_; }
  const Params& params() const { return params_; }

 private:
  Params params_;
  SiteSet sites_;
  double threshold_;
  Eigen::VectorXd nugget_sd_;
  Eigen::MatrixXd decay_;  // a(d_is, 1)
  Eigen::MatrixXd b_;      // b(d_is)
  Eigen::MatrixXd chol_;   // lower Cholesky factor of the residual correlation
};

/// Bivariate model with exponential margins and
/// [X_j | X_i = y] ~ N(mu + alpha y, sigma^2 y^(2 beta)), j != i.
class BivariateSampler : public ConditionalSampler {
 public:
  BivariateSampler(double mu, double sigma, double alpha, double beta, double threshold);

  std::size_t dim() const override { return 2; }
  double threshold() const override { return threshold_; }
  double exceed_prob(std::size_t) const override;
  Eigen::VectorXd sample_given(std::size_t i, double y0, Rng& rng) const override;

 private:
  double mu_, sigma_, alpha_, beta_, threshold_;
};

/// n_reps x sites draws conditioned on site s0: y0 = t + Exp(1), then the
/// conditional field given X(s0) = y0.
Eigen::MatrixXd simulate_single_site(const ConditionalSampler& model, std::size_t s0,
                                     std::size_t n_reps, Rng& rng);

enum class GlobalPath { keef, wadsworth };

std::string to_string(GlobalPath p);

struct GlobalSampleBatch {
  Eigen::MatrixXd replicates;                 // n_reps x sites
  std::vector<GlobalPath> path;               // per replicate
  std::vector<std::size_t> conditioned_on;    // site used to generate each replicate
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> exceed;  // replicates > threshold
  std::size_t attempts = 0;
  double acceptance() const;
};

struct GlobalOptions {
  // Keef path only: pilot draws per site for P(X_i is the max | X_i > t).
  std::size_t pilot_per_site = 2000;
  // Give up once this many proposals have been spent per requested replicate.
  std::size_t max_attempts_per_rep = 10000;
};

/// Draws from [X | max X > t] along the Wadsworth path: pick i with probability
/// proportional to P(X_i > t), draw from the model conditioned at i and accept
/// with probability 1 / |K|, K = {j : X_j > t}.
GlobalSampleBatch simulate_global_wadsworth(const ConditionalSampler& model, std::size_t n_reps,
                                            Rng& rng, const GlobalOptions& opts = {});

/// Draws from [X | max X > t] along the Keef path: pick i with probability
/// pi_i ~ P(X_i > t) P(X_i is the max | X_i > t) (pilot estimates), then draw
/// from the model conditioned at i until X_i is the maximum.
GlobalSampleBatch simulate_global_keef(const ConditionalSampler& model, std::size_t n_reps,
                                       Rng& rng, const GlobalOptions& opts = {});

/// Pilot estimates of P(X_i is the max | X_i > t) under the model conditioned at i.
Eigen::VectorXd keef_max_probs(const ConditionalSampler& model, std::size_t n_pilot, Rng& rng);

/// Standard normal to standard Laplace margins, accurate in both tails.
double laplace_from_normal(double z);

/// Realisations of a zero-mean Gaussian Matérn field transformed to Laplace
/// margins, keeping only those whose maximum exceeds `threshold`.
Eigen::MatrixXd simulate_gaussian_exceedances(const SiteSet& sites, const MaternParams& field,
                                              double threshold, std::size_t n_reps, Rng& rng);

}  // namespace postadj::condex

#endif  // POSTADJ_CONDEX_SIMULATE_HPP
