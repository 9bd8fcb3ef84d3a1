#include <chrono>
#include <sstream>

#include "postadj/condex/self_inconsistency.hpp"
#include "postadj/condex/simulate.hpp"
#include "postadj/studies/studies.hpp"

namespace postadj::studies {

namespace {

double both_exceed_rate(const condex::GlobalSampleBatch& b) {
  return static_cast<double>(b.exceed.rowwise().all().count()) / static_cast<double>(b.replicates.rows());
}

}  // namespace

StudyResult run_self_inconsistency_study(const StudyConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  condex::BivariateParams p;
  p.mu = cfg.param<double>("mu", p.mu);
  p.sigma = cfg.param<double>("sigma", p.sigma);
  p.alpha = cfg.param<double>("alpha", p.alpha);
  p.beta = cfg.param<double>("beta", p.beta);
  p.t = cfg.param<double>("t", p.t);
  const auto samples = cfg.param<std::size_t>("samples", 1000000);

  const condex::SelfInconsistency q = condex::self_inconsistency_demo(p);
  const condex::BivariateSampler model(p.mu, p.sigma, p.alpha, p.beta, p.t);
  Rng rng_w = rep_stream(cfg.seed, data_stream, 0);
  Rng rng_k = rep_stream(cfg.seed, data_stream, 1);
  const auto wad = condex::simulate_global_wadsworth(model, samples, rng_w);
  const auto keef = condex::simulate_global_keef(model, samples, rng_k);
  const double mc_w = both_exceed_rate(wad);
  const double mc_k = both_exceed_rate(keef);

  StudyResult out;
  out.config = cfg;
  out.config.reps = 1;
  out.extra = {{"quadrature", {{"p_keef", q.p_keef},
                               {"p_wadsworth", q.p_wadsworth},
                               {"q", q.q},
                               {"error_estimate", q.error_estimate},
                               {"converged", q.converged}}},
               {"monte_carlo", {{"p_keef", mc_k},
                                {"p_wadsworth", mc_w},
                                {"samples", samples},
                                {"acceptance_keef", keef.acceptance()},
                                {"acceptance_wadsworth", wad.acceptance()}}},
               {"gap", q.p_wadsworth - q.p_keef}};

  std::ostringstream csv;
  csv.precision(10);
  csv << "seed,path,method,probability,samples\n";
  csv << cfg.seed << ",keef,quadrature," << q.p_keef << ",0\n";
  csv << cfg.seed << ",wadsworth,quadrature," << q.p_wadsworth << ",0\n";
  csv << cfg.seed << ",keef,monte-carlo," << mc_k << ',' << samples << '\n';
  csv << cfg.seed << ",wadsworth,monte-carlo," << mc_w << ',' << samples << '\n';
  out.extra_tables.emplace_back("self_inconsistency.csv", csv.str());

  RepOutcome r;
  r.ok = q.converged;
  if (!q.converged) r.error = "quadrature did not reach the requested accuracy";
  out.reps.push_back(r);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace postadj::studies
