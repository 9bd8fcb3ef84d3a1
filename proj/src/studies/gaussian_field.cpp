#include <chrono>
#include <cmath>
#include <sstream>

#include "postadj/gaussian_models.hpp"
#include "postadj/grid_gmrf.hpp"
#include "postadj/studies/studies.hpp"

namespace postadj::studies {

namespace {

struct FieldSetup {
  double domain = 25.0;
  std::size_t n_sites = 400;
  Eigen::Index replicates = 200;
  double tau = 100.0;
  double rho = 12.0;
  double sigma = 1.0;
  double nu = 1.5;
  SiteSet sites;

  Eigen::VectorXd theta() const { return Eigen::Vector3d(tau, rho, sigma); }
  MaternParams matern() const { return {sigma * sigma, rho, nu}; }

  MatrixXd simulate(Eigen::Index n, Rng& rng) const {
    return add_nugget(sample_field(sites, matern(), n, rng), tau, rng);
  }
};

FieldSetup field_setup(const StudyConfig& cfg, Eigen::Index default_replicates) {
  FieldSetup s;
  s.domain = cfg.param<double>("domain", 25.0);
  s.n_sites = cfg.param<std::size_t>("n_sites", 400);
  s.replicates = cfg.param<Eigen::Index>("replicates", default_replicates);
  s.tau = cfg.param<double>("tau", 100.0);
  s.rho = cfg.param<double>("rho", 12.0);
  s.sigma = cfg.param<double>("sigma", 1.0);
  s.nu = cfg.param<double>("nu", 1.5);
  // The same locations are reused by every replication.
  Rng rng = rep_stream(cfg.seed, design_stream, 0);
  s.sites = SiteSet::uniform(s.n_sites, 0.0, s.domain, 0.0, s.domain, rng);
  return s;
}

PriorSet field_priors(const StudyConfig& cfg) {
  return PriorSet(field_layout(),
                  {Prior::gamma("tau", 1.0, cfg.param<double>("tau_prior_scale", 2e4)),
                   Prior::pc_range_sd("rho", cfg.param<double>("pc_range", 12.0), 0.5, "sigma",
                                      cfg.param<double>("pc_sd", 1.0), 0.5)});
}

StudyResult finish(const StudyConfig& cfg, std::size_t reps, std::vector<RepOutcome> outcomes,
                   std::chrono::steady_clock::time_point start) {
  StudyResult out;
  out.config = cfg;
  out.config.reps = reps;
  out.reps = std::move(outcomes);
  out.table = CoverageTable(cfg.study, field_layout().names(), reps);
  out.table.seed = cfg.seed;
  for (const auto& r : out.reps) out.table.add(r);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

StudyResult run_coarse_grid_study(const StudyConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const FieldSetup setup = field_setup(cfg, 200);
  const std::size_t reps = cfg.reps ? cfg.reps : default_reps(cfg.study, cfg.paper_scale);
  GridGmrfSpec spec;
  spec.x_max = spec.y_max = setup.domain;
  spec.spacing = cfg.param<double>("spacing", 5.0);
  spec.extension_cells = cfg.param<int>("extension_cells", 6);
  const GridGmrf grid(spec);
  const auto oracle_n = cfg.param<std::size_t>("oracle_n", 10000);

  std::ostringstream key;
  key << "coarse-grid sites=" << setup.n_sites << " domain=" << setup.domain << " theta=(" << setup.tau << ','
      << setup.rho << ',' << setup.sigma << ") nu=" << setup.nu << " spacing=" << spec.spacing
      << " ext=" << spec.extension_cells;
  const ThetaStarOracle oracle = cached_oracle(cfg, key.str(), oracle_n, [&] {
    Rng rng = rep_stream(cfg.seed, oracle_stream, 0);
    const CompositeLikelihood cl = gmrf_field_loglik(grid, setup.sites, setup.simulate(static_cast<Eigen::Index>(oracle_n), rng));
    const ModeResult mle = composite_mle(cl, setup.theta());
    ThetaStarOracle o;
    o.study = cfg.study;
    o.names = field_layout().names();
    o.theta = mle.theta;
    o.method = "large-n MLE";
    o.converged = mle.converged;
    return o;
  });
  if (!oracle.converged) throw EvaluationError("coarse-grid: theta* oracle MLE did not converge");

  const PriorSet priors = field_priors(cfg);
  auto outcomes = run_replications(reps, cfg.workers, [&](std::size_t i) {
    Rng rng = rep_stream(cfg.seed, data_stream, i);
    const CompositeLikelihood cl = gmrf_field_loglik(grid, setup.sites, setup.simulate(setup.replicates, rng));
    return score_pipeline(i, cl, priors, pipeline_config(cfg, i, setup.theta()), oracle.theta);
  });
  StudyResult out = finish(cfg, reps, std::move(outcomes), start);
  out.oracle = oracle;
  out.extra["grid_nodes"] = grid.num_nodes();
  out.extra["extension_covers_2rho"] = grid.extension_covers(oracle.theta(1));
  return out;
}

StudyResult run_block_composite_study(const StudyConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const FieldSetup setup = field_setup(cfg, 100);
  const std::size_t reps = cfg.reps ? cfg.reps : default_reps(cfg.study, cfg.paper_scale);
  const auto per_side = cfg.param<std::size_t>("blocks_per_side", 5);
  const Blocks blocks = rectangular_blocks(setup.sites, 0.0, setup.domain, 0.0, setup.domain, per_side, per_side);
  const Eigen::VectorXd theta_star = setup.theta();

  const PriorSet priors = field_priors(cfg);
  auto outcomes = run_replications(reps, cfg.workers, [&](std::size_t i) {
    Rng rng = rep_stream(cfg.seed, data_stream, i);
    const CompositeLikelihood cl =
        block_composite_gaussian(setup.sites, setup.simulate(setup.replicates, rng), blocks, setup.nu);
    return score_pipeline(i, cl, priors, pipeline_config(cfg, i, theta_star), theta_star);
  });
  StudyResult out = finish(cfg, reps, std::move(outcomes), start);
  out.oracle = ThetaStarOracle{cfg.study, field_layout().names(), theta_star, "analytic", 0, cfg.seed, true,
                               "generating parameters"};
  out.extra["blocks"] = blocks.size();
  return out;
}

}  // namespace postadj::studies
