#ifndef POSTADJ_SANDWICH_HPP
#define POSTADJ_SANDWICH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "postadj/inference.hpp"
#include "postadj/likelihoods.hpp"
#include "postadj/matrix_kit.hpp"
#include "postadj/params.hpp"

namespace postadj {

/// theta*, H, J, Godambe I = H J^-1 H and C with C H^-1 C^T = I^-1. All
/// matrices live on the unconstrained scale of theta_star's layout.
struct SandwichEstimate {
  ParamVector theta_star;
  SpdMatrix H;
  SpdMatrix J;
  SpdMatrix godambe;
  MatrixXd C;
  std::size_t window = 0;
  bool h_floored = false;
  bool j_floored = false;
  bool godambe_floored = false;
  Warnings warnings;

  nlohmann::json to_json() const;
  static SandwichEstimate from_json(const nlohmann::json& j);
};

/// -sum w d2l / du2 at theta_star, via the numeric Hessian of the weighted total.
FlooredSpd estimate_H(const CompositeLikelihood& cl, const VectorXd& theta_star,
                      Warnings* warnings = nullptr);

/// Per-term scores g_ij (numeric Jacobian of the term values) combined as
/// sum_{ij} w_ij g_ij sum_{(i',j') in Delta(i,j)} w_i'j' g_i'j'^T.
FlooredSpd estimate_J(const CompositeLikelihood& cl, const VectorXd& theta_star,
                      const NeighborStructure& nb, Warnings* warnings = nullptr);

/// Sliding-window sum from precomputed weighted scores (rows) and their time indices.
MatrixXd windowed_score_outer(const MatrixXd& weighted_scores, const std::vector<std::size_t>& times,
                              std::size_t window);

FlooredSpd godambe(const SpdMatrix& H, const SpdMatrix& J, Warnings* warnings = nullptr);

/// (M1^-1 M2)^T with M1, M2 the symmetric roots of H^-1 and I^-1.
MatrixXd build_C(const SpdMatrix& H, const SpdMatrix& godambe_info, Warnings* warnings = nullptr);

SandwichEstimate estimate_sandwich(const CompositeLikelihood& cl, const VectorXd& theta_star);

/// theta_adj = theta* + C (theta - theta*) on the unconstrained scale, then back-transformed.
PosteriorDraws adjust_draws(const PosteriorDraws& draws, const SandwichEstimate& est);

class PipelineError : public Error {
 public:
  PipelineError(const std::string& stage, const std::string& what)
      : Error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class SamplerKind { laplace, mcmc };

struct PipelineConfig {
  SamplerKind sampler = SamplerKind::laplace;
  Eigen::Index n_draws = 5000;
  std::uint64_t seed = 0;
  VectorXd theta_init;             // natural scale
  bool theta_star_from_mle = false;  // flat-prior estimate of theta* instead of the posterior mode
  OptimOptions optim;
  McmcOptions mcmc;
};

struct PipelineResult {
  TwoStepMode mode;
  PosteriorDraws unadjusted;
  PosteriorDraws adjusted;
  std::optional<SandwichEstimate> estimate;
  VectorXd skewness;  // per-parameter sample skewness of the unadjusted draws (unconstrained scale)
  bool mcmc_tuning_failed = false;
  Warnings warnings;
};

/// Mode and unadjusted draws only (the first two pipeline stages).
PipelineResult sample_posterior(const CompositeLikelihood& cl, const PriorSet& priors,
                                const PipelineConfig& cfg);

/// Mode -> sample -> H, J -> Godambe -> C -> adjusted draws. Failures are
/// rethrown as PipelineError naming the stage.
PipelineResult full_adjustment_pipeline(const CompositeLikelihood& cl, const PriorSet& priors,
                                        const PipelineConfig& cfg);

VectorXd sample_skewness(const MatrixXd& draws);

}  // namespace postadj

#endif  // POSTADJ_SANDWICH_HPP
