#include <chrono>
#include <cmath>
#include <sstream>

#include "postadj/condex/likelihood.hpp"
#include "postadj/condex/simulate.hpp"
#include "postadj/studies/studies.hpp"

namespace postadj::studies {

namespace {

struct GridDesign {
  std::size_t nx = 13;
  double spacing = 2.0;
  std::size_t stride = 2;
  std::size_t offset = 0;
  double radius = 8.0;
  double threshold = 0.0;
  condex::Design design;

  std::string key() const {
    std::ostringstream os;
    os << "grid=" << nx << 'x' << nx << " spacing=" << spacing << " stride=" << stride << " offset=" << offset
       << " radius=" << radius << " t=" << threshold;
    return os.str();
  }
};

GridDesign grid_design(const StudyConfig& cfg, GridDesign d) {
  d.nx = cfg.param<std::size_t>("nx", d.nx);
  d.spacing = cfg.param<double>("spacing", d.spacing);
  d.stride = cfg.param<std::size_t>("stride", d.stride);
  d.offset = cfg.param<std::size_t>("offset", d.offset);
  d.radius = cfg.param<double>("radius", d.radius);
  d.threshold = cfg.param<double>("threshold", d.threshold);
  d.design = condex::make_design(SiteSet::grid(d.nx, d.nx, d.spacing), d.threshold,
                                 condex::grid_subset(d.nx, d.nx, d.stride, d.offset), d.radius);
  return d;
}

PriorSet condex_priors(const condex::ParamMap& map) {
  std::vector<Prior> v{Prior::gaussian_on_link("lambda", 4.0, 3.0), Prior::gaussian_on_link("kappa", -0.4, 3.0),
                       Prior::gamma("tau", 1.0, 2e4), Prior::pc_range_sd("rho", 60.0, 0.95, "sigma", 4.0, 0.05)};
  if (!map.rho_b_fixed()) v.push_back(Prior::gaussian_on_link("rho_b", std::log(6.0), 2.0));
  return PriorSet(map.layout(), std::move(v));
}

condex::Params truth_params(const StudyConfig& cfg) {
  condex::Params p;  // defaults are the generating values of the global study
  p.lambda = cfg.param<double>("lambda", p.lambda);
  p.kappa = cfg.param<double>("kappa", p.kappa);
  p.sigma_b = cfg.param<double>("sigma", p.sigma_b);
  p.rho_b = cfg.param<double>("rho_b_true", p.rho_b);
  p.rho_z = cfg.param<double>("rho", p.rho_z);
  p.tau = cfg.param<double>("tau", p.tau);
  return p;
}

ThetaStarOracle full_oracle(const StudyConfig& cfg, const GridDesign& g, const Eigen::MatrixXd& data,
                            const condex::Params& init) {
  const auto map = condex::ParamMap::free_rho_b();
  const CompositeLikelihood cl = condex::condex_composite(g.design, data, map);
  OptimOptions opts;
  opts.max_iter = 1000;
  const ModeResult mle = composite_mle(cl, init.to_vector(), opts);
  ThetaStarOracle o;
  o.study = cfg.study;
  o.names = map.layout().names();
  o.theta = mle.theta;
  o.method = "large-n MLE";
  o.converged = mle.converged;
  return o;
}

struct CondexRun {
  std::vector<RepOutcome> reps;
  std::vector<double> terms;
};

template <typename Simulate>
CondexRun run_condex_reps(const StudyConfig& cfg, std::size_t reps, const GridDesign& g,
                          const condex::ParamMap& map, const Eigen::VectorXd& theta_init,
                          const Eigen::VectorXd& theta_star, Simulate simulate) {
  const PriorSet priors = condex_priors(map);
  CondexRun out;
  out.terms.assign(reps, 0.0);
  out.reps = run_replications(reps, cfg.workers, [&](std::size_t i) {
    Rng rng = rep_stream(cfg.seed, data_stream, i);
    const CompositeLikelihood cl = condex::condex_composite(g.design, simulate(rng), map);
    out.terms[i] = static_cast<double>(cl.num_terms());
    return score_pipeline(i, cl, priors, pipeline_config(cfg, i, theta_init), theta_star);
  });
  return out;
}

StudyResult assemble(const StudyConfig& cfg, std::size_t reps, const condex::ParamMap& map, CondexRun run,
                     ThetaStarOracle oracle, std::chrono::steady_clock::time_point start) {
  StudyResult out;
  out.config = cfg;
  out.config.reps = reps;
  out.reps = std::move(run.reps);
  out.table = CoverageTable(cfg.study, map.layout().names(), reps);
  out.table.seed = cfg.seed;
  for (const auto& r : out.reps) out.table.add(r);
  out.oracle = std::move(oracle);
  double lo = 1e300, hi = 0.0, sum = 0.0;
  for (double t : run.terms) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
    sum += t;
  }
  out.extra["exceedances_per_fit"] = {{"min", lo}, {"max", hi}, {"mean", reps ? sum / static_cast<double>(reps) : 0.0}};
  out.extra["rho_b"] = map.rho_b_fixed() ? nlohmann::json(map.rho_b_value()) : nlohmann::json("free");
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

condex::ParamMap study_map(const StudyConfig& cfg, const ThetaStarOracle& oracle) {
  const std::string mode = cfg.param<std::string>("rho_b", "fixed");
  if (mode == "free") return condex::ParamMap::free_rho_b();
  if (mode != "fixed") throw ConfigError("rho_b must be 'fixed' or 'free'");
  return condex::ParamMap::fixed_rho_b(oracle.theta(3));
}

}  // namespace

StudyResult run_condex_global_study(const StudyConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t reps = cfg.reps ? cfg.reps : default_reps(cfg.study, cfg.paper_scale);
  GridDesign defaults;
  defaults.threshold = condex::laplace_quantile(0.9975);
  const GridDesign g = grid_design(cfg, defaults);
  const condex::Params truth = truth_params(cfg);
  const condex::SpatialSampler sampler(truth, g.design.sites, g.threshold);
  const auto replicates = cfg.param<std::size_t>("replicates", 100);
  const auto oracle_n = cfg.param<std::size_t>("oracle_n", 20000);

  std::ostringstream key;
  key << "condex-global " << g.key() << " theta=(" << truth.to_vector().transpose() << ")";
  const ThetaStarOracle oracle = cached_oracle(cfg, key.str(), oracle_n, [&] {
    Rng rng = rep_stream(cfg.seed, oracle_stream, 0);
    const auto batch = condex::simulate_global_wadsworth(sampler, oracle_n, rng);
    return full_oracle(cfg, g, batch.replicates, truth);
  });
  if (!oracle.converged) throw EvaluationError("condex-global: theta* oracle MLE did not converge");

  const condex::ParamMap map = study_map(cfg, oracle);
  const condex::Params star = condex::Params::from_vector(oracle.theta);
  CondexRun run = run_condex_reps(cfg, reps, g, map, map.to_theta(truth), map.to_theta(star), [&](Rng& rng) {
    return condex::simulate_global_wadsworth(sampler, replicates, rng).replicates;
  });
  return assemble(cfg, reps, map, std::move(run), oracle, start);
}

StudyResult run_condex_gaussian_s2_study(const StudyConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t reps = cfg.reps ? cfg.reps : default_reps(cfg.study, cfg.paper_scale);
  GridDesign defaults;
  defaults.nx = 15;
  defaults.spacing = 1.0;
  defaults.stride = 3;
  defaults.offset = 1;
  defaults.radius = 4.0;
  defaults.threshold = condex::laplace_quantile(0.95);
  const GridDesign g = grid_design(cfg, defaults);
  const MaternParams field{1.0, cfg.param<double>("range", 8.0), cfg.param<double>("nu", 1.0)};
  const auto replicates = cfg.param<std::size_t>("replicates", 500);
  const auto oracle_n = cfg.param<std::size_t>("oracle_n", 20000);

  std::ostringstream key;
  key << "condex-gaussian-s2 " << g.key() << " range=" << field.rho << " nu=" << field.nu;
  const ThetaStarOracle oracle = cached_oracle(cfg, key.str(), oracle_n, [&] {
    Rng rng = rep_stream(cfg.seed, oracle_stream, 0);
    const Eigen::MatrixXd data = condex::simulate_gaussian_exceedances(g.design.sites, field, g.threshold, oracle_n, rng);
    return full_oracle(cfg, g, data, condex::Params{5.0, 1.0, 1.5, 1.0, 7.0, 20.0, 1.5});
  });
  if (!oracle.converged) throw EvaluationError("condex-gaussian-s2: theta* oracle MLE did not converge");

  const auto map = condex::ParamMap::fixed_rho_b(oracle.theta(3));
  const Eigen::VectorXd theta_star = map.to_theta(condex::Params::from_vector(oracle.theta));
  CondexRun run = run_condex_reps(cfg, reps, g, map, theta_star, theta_star, [&](Rng& rng) {
    return condex::simulate_gaussian_exceedances(g.design.sites, field, g.threshold, replicates, rng);
  });
  return assemble(cfg, reps, map, std::move(run), oracle, start);
}

}  // namespace postadj::studies
