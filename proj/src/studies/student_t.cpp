#include <chrono>
#include <cmath>

#include "postadj/gaussian_models.hpp"
#include "postadj/studies/studies.hpp"

namespace postadj::studies {

StudyResult run_student_t_study(const StudyConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto n = cfg.param<Eigen::Index>("n", 100);
  const double df = cfg.param<double>("df", 1.0);
  const double prior_precision = cfg.param<double>("prior_precision", 1e-3);
  const std::size_t reps = cfg.reps ? cfg.reps : default_reps(cfg.study, cfg.paper_scale);

  const ParamLayout layout({"mu"}, {Link::identity});
  const PriorSet priors(layout, {Prior::gaussian_on_link("mu", 0.0, 1.0 / std::sqrt(prior_precision))});
  const Eigen::VectorXd theta_star = Eigen::VectorXd::Zero(1);

  StudyResult out;
  out.config = cfg;
  out.config.reps = reps;
  out.oracle = ThetaStarOracle{cfg.study, {"mu"}, theta_star, "analytic", 0, cfg.seed, true, "symmetric"};
  out.reps = run_replications(reps, cfg.workers, [&](std::size_t i) {
    Rng rng = rep_stream(cfg.seed, data_stream, i);
    const Eigen::VectorXd y = student_t_sample(df, n, rng);
    const CompositeLikelihood cl = gaussian_fixed_var_loglik(y);
    return score_pipeline(i, cl, priors, pipeline_config(cfg, i, theta_star), theta_star);
  });
  out.table = CoverageTable(cfg.study, {"mu"}, reps);
  out.table.seed = cfg.seed;
  for (const auto& r : out.reps) out.table.add(r);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace postadj::studies
