#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "postadj/condex/likelihood.hpp"
#include "postadj/condex/simulate.hpp"
#include "postadj/studies/studies.hpp"

namespace postadj::studies {

namespace {

Eigen::MatrixXd thin(const Eigen::MatrixXd& draws, std::size_t n_s) {
  const auto rows = static_cast<std::size_t>(draws.rows());
  if (rows <= n_s) return draws;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_s), draws.cols());
  for (std::size_t k = 0; k < n_s; ++k) {
    out.row(static_cast<Eigen::Index>(k)) = draws.row(static_cast<Eigen::Index>(k * rows / n_s));
  }
  return out;
}

}  // namespace

Ranking rank_by_logscore(const std::vector<ModelDraws>& models, const std::vector<HeldOutSite>& sites,
                         std::size_t n_s) {
  if (models.empty()) throw ConfigError("rank_by_logscore: no models");
  if (n_s == 0) throw ConfigError("rank_by_logscore: n_s must be positive");
  std::vector<Eigen::MatrixXd> draws;
  for (const auto& m : models) {
    if (m.draws.rows() == 0) throw ConfigError("rank_by_logscore: model '" + m.id + "' has no draws");
    draws.push_back(thin(m.draws, n_s));
  }
  // Tie order: model id, then position.
  std::vector<std::size_t> tie(models.size());
  std::iota(tie.begin(), tie.end(), 0);
  std::stable_sort(tie.begin(), tie.end(), [&](auto a, auto b) { return models[a].id < models[b].id; });
  std::vector<std::size_t> tie_pos(models.size());
  for (std::size_t k = 0; k < tie.size(); ++k) tie_pos[tie[k]] = k;

  Ranking r;
  for (const auto& m : models) r.models.push_back(m.id);
  std::vector<Eigen::VectorXd> rows;
  for (const auto& s : sites) {
    if (!s.loglik) {
      r.skipped.push_back(s.site);
      continue;
    }
    const auto safe = [&](const Eigen::VectorXd& theta) {
      try {
        return s.loglik(theta);
      } catch (const std::exception&) {
        return -std::numeric_limits<double>::infinity();
      }
    };
    Eigen::VectorXd row(static_cast<Eigen::Index>(models.size()));
    for (std::size_t m = 0; m < models.size(); ++m) row(static_cast<Eigen::Index>(m)) = log_score(safe, draws[m]).value;
    r.sites.push_back(s.site);
    rows.push_back(row);
  }
  const auto n_sites = static_cast<Eigen::Index>(rows.size());
  const auto n_models = static_cast<Eigen::Index>(models.size());
  r.scores.resize(n_sites, n_models);
  r.ranks.resize(n_sites, n_models);
  for (Eigen::Index i = 0; i < n_sites; ++i) {
    r.scores.row(i) = rows[static_cast<std::size_t>(i)].transpose();
    std::vector<std::size_t> order(models.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      const double sa = r.scores(i, static_cast<Eigen::Index>(a));
      const double sb = r.scores(i, static_cast<Eigen::Index>(b));
      if (sa != sb) return sa > sb;
      return tie_pos[a] < tie_pos[b];
    });
    for (std::size_t k = 0; k < order.size(); ++k) r.ranks(i, static_cast<Eigen::Index>(order[k])) = static_cast<int>(k + 1);
  }
  return r;
}

std::string Ranking::to_csv(std::uint64_t seed) const {
  std::ostringstream os;
  os.precision(10);
  os << "seed,site,model,log_score,rank\n";
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index m = 0; m < scores.cols(); ++m) {
      os << seed << ',' << sites[static_cast<std::size_t>(i)] << ',' << models[static_cast<std::size_t>(m)] << ','
         << scores(i, m) << ',' << ranks(i, m) << '\n';
    }
  }
  return os.str();
}

std::string Ranking::histogram_csv(std::uint64_t seed) const {
  std::ostringstream os;
  os << "seed,model,rank,count\n";
  for (Eigen::Index m = 0; m < ranks.cols(); ++m) {
    for (int k = 1; k <= static_cast<int>(ranks.cols()); ++k) {
      os << seed << ',' << models[static_cast<std::size_t>(m)] << ',' << k << ',' << (ranks.col(m).array() == k).count()
         << '\n';
    }
  }
  return os.str();
}

double Ranking::fraction_better(std::size_t a, std::size_t b) const {
  if (scores.rows() == 0) return 0.0;
  const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
  return static_cast<double>((scores.col(ia).array() > scores.col(ib).array()).count()) /
         static_cast<double>(scores.rows());
}

StudyResult run_logscore_study(const StudyConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto nx = cfg.param<std::size_t>("nx", 13);
  const double spacing = cfg.param<double>("spacing", 2.0);
  const auto stride = cfg.param<std::size_t>("stride", 2);
  const double radius = cfg.param<double>("radius", 8.0);
  const double t = cfg.param<double>("threshold", condex::laplace_quantile(0.9975));
  const auto replicates = cfg.param<std::size_t>("replicates", 600);
  const auto n_s = cfg.param<std::size_t>("n_s", 500);
  const auto n_single = cfg.param<std::size_t>("single_site_models", 4);
  const double h = cfg.param<double>("heterogeneity", 0.5);

  const SiteSet sites = SiteSet::grid(nx, nx, spacing);
  const std::vector<std::size_t> training = condex::grid_subset(nx, nx, stride);
  const condex::Params truth;
  // lambda drifts along x and sigma along y, so each site has its own best fit.
  std::vector<condex::Params> per_site(sites.size(), truth);
  const double extent = spacing * static_cast<double>(nx - 1);
  for (std::size_t s = 0; s < sites.size(); ++s) {
    const double gx = extent > 0.0 ? 2.0 * sites[s][0] / extent - 1.0 : 0.0;
    const double gy = extent > 0.0 ? 2.0 * sites[s][1] / extent - 1.0 : 0.0;
    per_site[s].lambda *= std::exp(h * gx);
    per_site[s].sigma_b *= std::exp(0.5 * h * gy);
  }
  const condex::SpatialSampler sampler(per_site, sites, t);
  Rng rng = rep_stream(cfg.seed, data_stream, 0);
  const Eigen::MatrixXd data = condex::simulate_global_wadsworth(sampler, replicates, rng).replicates;

  const auto map = condex::ParamMap::free_rho_b();
  const PriorSet priors(map.layout(),
                        {Prior::gaussian_on_link("lambda", 4.0, 3.0), Prior::gaussian_on_link("kappa", -0.4, 3.0),
                         Prior::gaussian_on_link("rho_b", std::log(6.0), 2.0), Prior::gamma("tau", 1.0, 2e4),
                         Prior::pc_range_sd("rho", 60.0, 0.95, "sigma", 4.0, 0.05)});

  struct Fit {
    std::string id;
    std::vector<std::size_t> conditioning;
  };
  std::vector<Fit> fits{{"global", training}};
  if (n_single > 0) {
    // First single-site model at the training site with most exceedances, the rest at random sites.
    const auto counts = condex::exceedance_counts(condex::make_design(sites, t, training, radius), data);
    const auto best = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    std::vector<std::size_t> chosen{training[best]};
    Rng pick = rep_stream(cfg.seed, design_stream, 0);
    std::uniform_int_distribution<std::size_t> u(0, sites.size() - 1);
    while (chosen.size() < std::min(n_single, sites.size())) {
      const std::size_t s = u(pick);
      if (std::find(chosen.begin(), chosen.end(), s) == chosen.end()) chosen.push_back(s);
    }
    for (auto s0 : chosen) fits.push_back({"single-" + std::to_string(s0), {s0}});
  }

  StudyResult out;
  out.config = cfg;
  out.config.reps = 1;
  std::vector<ModelDraws> models;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (adjusted, unadjusted) model positions
  nlohmann::json fit_report = nlohmann::json::array();
  for (std::size_t f = 0; f < fits.size(); ++f) {
    RepOutcome rep;
    rep.index = f;
    try {
      const condex::Design design = condex::make_design(sites, t, fits[f].conditioning, radius);
      const CompositeLikelihood cl = condex::condex_composite(design, data, map);
      const PipelineResult res =
          full_adjustment_pipeline(cl, priors, pipeline_config(cfg, f, map.to_theta(truth)));
      if (!res.mode.mode.converged) throw EvaluationError("mode search did not converge: " + res.mode.mode.status);
      rep.ok = true;
      rep.mode = res.mode.mode.theta;
      rep.unadjusted_checksum = res.unadjusted.checksum();
      rep.adjusted_source_checksum = res.adjusted.source_checksum;
      models.push_back({fits[f].id, res.unadjusted.draws});
      models.push_back({fits[f].id + "-adj", res.adjusted.draws});
      pairs.emplace_back(models.size() - 1, models.size() - 2);
      fit_report.push_back({{"model", fits[f].id}, {"exceedances", cl.num_terms()}, {"status", "ok"}});
    } catch (const std::exception& e) {
      rep.error = fits[f].id + ": " + e.what();
      fit_report.push_back({{"model", fits[f].id}, {"status", e.what()}});
    }
    out.reps.push_back(rep);
  }
  if (models.empty()) throw EvaluationError("logscore: no model could be fitted");

  std::vector<HeldOutSite> held;
  std::vector<std::shared_ptr<CompositeLikelihood>> keep;
  for (std::size_t s = 0; s < sites.size(); ++s) {
    if (std::find(training.begin(), training.end(), s) != training.end()) continue;
    HeldOutSite h;
    h.site = s;
    const condex::Design d = condex::make_design(sites, t, {s}, radius);
    if (condex::exceedance_counts(d, data)[0] > 0) {
      auto cl = std::make_shared<CompositeLikelihood>(condex::condex_composite(d, data, map));
      h.loglik = [cl](const Eigen::VectorXd& theta) { return cl->value(theta); };
    }
    held.push_back(std::move(h));
  }
  const Ranking ranking = rank_by_logscore(models, held, n_s);

  nlohmann::json comparisons = nlohmann::json::array();
  double min_fraction = 1.0;
  for (const auto& [adj, unadj] : pairs) {
    const double f = ranking.fraction_better(adj, unadj);
    min_fraction = std::min(min_fraction, f);
    comparisons.push_back({{"adjusted", models[adj].id}, {"unadjusted", models[unadj].id}, {"fraction_better", f}});
  }
  out.extra = {{"fits", fit_report},
               {"heterogeneity", h},
               {"held_out_sites", ranking.sites.size()},
               {"skipped_sites", ranking.skipped},
               {"n_s", n_s},
               {"comparisons", comparisons},
               {"min_fraction_better", min_fraction}};
  out.extra_tables.emplace_back("logscore_ranking.csv", ranking.to_csv(cfg.seed));
  out.extra_tables.emplace_back("logscore_histogram.csv", ranking.histogram_csv(cfg.seed));
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace postadj::studies
