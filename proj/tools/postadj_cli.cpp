#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "postadj/condex/likelihood.hpp"
#include "postadj/condex/panel_io.hpp"
#include "postadj/condex/pit.hpp"
#include "postadj/condex/self_inconsistency.hpp"
#include "postadj/condex/simulate.hpp"
#include "postadj/gaussian_models.hpp"
#include "postadj/matrix_kit.hpp"
#include "postadj/sandwich.hpp"
#include "postadj/studies/studies.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace postadj;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::size_t reps = 0;
  std::string out;
  std::string sampler = "laplace";
  bool paper_scale = false;
  Eigen::Index draws = 5000;
  std::size_t workers = 0;
  std::vector<std::string> params;
};

SamplerKind sampler_kind(const std::string& s) { return s == "mcmc" ? SamplerKind::mcmc : SamplerKind::laplace; }

json parse_params(const std::vector<std::string>& kv) {
  json j = json::object();
  for (const auto& p : kv) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + p + "'");
    const std::string key = p.substr(0, eq), value = p.substr(eq + 1);
    try {
      j[key] = json::parse(value);
    } catch (const json::parse_error&) {
      j[key] = value;
    }
  }
  return j;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << text;
}

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  return json::parse(is);
}

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) r[static_cast<std::size_t>(k)] = m(i, k);
    rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto p = n ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string draws_csv(const PosteriorDraws& d) {
  std::ostringstream os;
  os.precision(12);
  const auto& names = d.layout.names();
  for (std::size_t k = 0; k < names.size(); ++k) os << (k ? "," : "") << names[k];
  os << '\n';
  for (Eigen::Index i = 0; i < d.draws.rows(); ++i) {
    for (Eigen::Index k = 0; k < d.draws.cols(); ++k) os << (k ? "," : "") << d.draws(i, k);
    os << '\n';
  }
  return os.str();
}

// ---- study ----

int cmd_study(const Globals& g, const std::string& id) {
  studies::StudyConfig cfg;
  cfg.study = id;
  cfg.reps = g.reps;
  cfg.seed = g.seed;
  cfg.sampler = sampler_kind(g.sampler);
  cfg.n_draws = g.draws;
  cfg.workers = g.workers;
  cfg.paper_scale = g.paper_scale;
  cfg.params = parse_params(g.params);
  const fs::path out = fs::path(g.out.empty() ? "results" : g.out);
  cfg.oracle_cache = (out / "oracles").string();
  const studies::StudyResult r = studies::run_study(cfg);
  const fs::path dir = out / id;
  studies::emit_outputs(r, dir.string());

  std::size_t failed = 0;
  for (const auto& rep : r.reps) {
    if (rep.ok) continue;
    ++failed;
    std::cerr << "replication " << rep.index << " excluded: " << rep.error << '\n';
  }
  if (r.oracle) {
    std::cout << "theta* (" << r.oracle->method << "):";
    for (Eigen::Index k = 0; k < r.oracle->theta.size(); ++k) std::cout << ' ' << r.oracle->theta(k);
    std::cout << '\n';
  }
  if (!r.table.params.empty()) std::cout << r.table.pretty();
  if (!r.extra.empty()) std::cout << r.extra.dump(2) << '\n';
  std::cout << "outputs written to " << dir.string() << " (" << failed << " excluded, causes in manifest.json)\n";
  // Excluded replications carry a logged cause; a study without any usable result is a failure.
  const bool any_ok = std::any_of(r.reps.begin(), r.reps.end(), [](const auto& x) { return x.ok; });
  return any_ok ? 0 : 1;
}

// ---- selfcheck ----

int cmd_selfcheck(const Globals& g) {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    if (!ok) ++failures;
  };
  Rng rng = make_stream(g.seed, 0);
  {
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Eigen::Index p = 2 + k % 7;
      const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(p, p, [&] { return std::normal_distribution<double>()(rng); });
      const Eigen::MatrixXd b = Eigen::MatrixXd::NullaryExpr(p, p, [&] { return std::normal_distribution<double>()(rng); });
      const SpdMatrix h(a * a.transpose() + Eigen::MatrixXd::Identity(p, p));
      const SpdMatrix info(b * b.transpose() + Eigen::MatrixXd::Identity(p, p));
      const Eigen::MatrixXd c = build_C(h, info);
      const Eigen::MatrixXd target = info.inverse();
      worst = std::max(worst, (c * h.inverse() * c.transpose() - target).norm() / target.norm());
    }
    report("adjustment equation", worst < 1e-8, "max rel err " + std::to_string(worst));
  }
  {
    const condex::SelfInconsistency s = condex::self_inconsistency_demo({});
    report("self-inconsistency quadrature", std::abs(s.p_keef - 0.17) <= 0.005 && std::abs(s.p_wadsworth - 0.37) <= 0.005,
           "(" + std::to_string(s.p_keef) + ", " + std::to_string(s.p_wadsworth) + ")");
  }
  {
    const SiteSet sites = SiteSet::grid(4, 4, 2.0);
    const condex::Params p;
    const condex::SpatialSampler sampler(p, sites, 2.0);
    const auto batch = condex::simulate_global_wadsworth(sampler, 30, rng);
    const auto design = condex::make_design(sites, 2.0, {0, 5, 10, 15}, 0.0);
    condex::CompositeOptions plain;
    plain.moment_totals = false;
    const auto map = condex::ParamMap::free_rho_b();
    const CompositeLikelihood fast = condex::condex_composite(design, batch.replicates, map);
    const CompositeLikelihood slow = condex::condex_composite(design, batch.replicates, map, {}, plain);
    const Eigen::VectorXd th = p.to_vector();
    const double a = fast.value(th), b = slow.value(th), c = fast.term_values(th).sum();
    const double err = std::max(std::abs(a - b), std::abs(a - c)) / std::abs(b);
    report("condex composite totals", err < 1e-10, "rel diff " + std::to_string(err));
  }
  {
    Rng r1 = studies::rep_stream(g.seed, studies::data_stream, 7), r2 = studies::rep_stream(g.seed, studies::data_stream, 7);
    report("stream determinism", r1() == r2(), "");
  }
  {
    std::normal_distribution<double> nd;
    Eigen::VectorXd y(5000);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = 1.0 + 2.0 * nd(rng);
    const CompositeLikelihood cl = gaussian_iid_loglik(y);
    const Eigen::Vector2d th(y.mean(), std::sqrt((y.array() - y.mean()).square().mean()));
    const SandwichEstimate est = estimate_sandwich(cl, th);
    const double jh = (est.J.matrix() - est.H.matrix()).norm() / est.H.matrix().norm();
    report("Fisher reduction", jh < 0.1, "|J - H| / |H| = " + std::to_string(jh));
  }
  return failures ? 1 : 0;
}

// ---- fit / adjust ----

struct FitSettings {
  double threshold_prob = 0.9975;
  double radius = 8.0;
  std::string conditioning = "all";
  bool pit = false;
  double pit_radius = 5.0;
  std::string rho_b = "free";
  std::size_t window = 5;
};

json settings_json(const FitSettings& s) {
  return {{"threshold_prob", s.threshold_prob}, {"radius", s.radius}, {"conditioning", s.conditioning},
          {"pit", s.pit},  {"pit_radius", s.pit_radius}, {"rho_b", s.rho_b}, {"window", s.window}};
}

FitSettings settings_from(const json& j) {
  FitSettings s;
  s.threshold_prob = j.at("threshold_prob").get<double>();
  s.radius = j.at("radius").get<double>();
  s.conditioning = j.at("conditioning").get<std::string>();
  s.pit = j.at("pit").get<bool>();
  s.pit_radius = j.at("pit_radius").get<double>();
  s.rho_b = j.at("rho_b").get<std::string>();
  s.window = j.at("window").get<std::size_t>();
  return s;
}

struct PanelModel {
  condex::ParamMap map;
  std::unique_ptr<CompositeLikelihood> cl;
  PriorSet priors;
};

PanelModel panel_model(const std::string& csv, const FitSettings& s) {
  condex::Panel panel = condex::read_panel_csv(csv);
  if (s.pit) panel = condex::laplace_pit(panel, condex::PitOptions{s.pit_radius, 20});
  std::vector<std::size_t> cond;
  if (s.conditioning == "all") {
    for (std::size_t k = 0; k < panel.sites.size(); ++k) cond.push_back(k);
  } else {
    std::stringstream ss(s.conditioning);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto id = std::stoul(item);
      const auto it = std::find(panel.site_ids.begin(), panel.site_ids.end(), id);
      if (it == panel.site_ids.end()) throw ConfigError("conditioning site id " + item + " not in panel");
      cond.push_back(static_cast<std::size_t>(it - panel.site_ids.begin()));
    }
  }
  const condex::Design design =
      condex::make_design(panel.sites, condex::laplace_quantile(s.threshold_prob), cond, s.radius);
  PanelModel m;
  if (s.rho_b == "free") {
    m.map = condex::ParamMap::free_rho_b();
  } else {
    m.map = condex::ParamMap::fixed_rho_b(std::stod(s.rho_b));
  }
  m.cl = std::make_unique<CompositeLikelihood>(condex::condex_composite(design, panel.values, m.map, panel.times));
  m.cl->set_neighbors({s.window});
  std::vector<Prior> pr{Prior::gaussian_on_link("lambda", 4.0, 3.0), Prior::gaussian_on_link("kappa", -0.4, 3.0),
                        Prior::gamma("tau", 1.0, 2e4), Prior::pc_range_sd("rho", 60.0, 0.95, "sigma", 4.0, 0.05)};
  if (!m.map.rho_b_fixed()) pr.push_back(Prior::gaussian_on_link("rho_b", std::log(6.0), 2.0));
  m.priors = PriorSet(m.map.layout(), pr);
  return m;
}

int cmd_fit(const Globals& g, const std::string& csv, const FitSettings& s) {
  const PanelModel m = panel_model(csv, s);
  PipelineConfig pc;
  pc.sampler = sampler_kind(g.sampler);
  pc.n_draws = g.draws;
  pc.seed = g.seed;
  pc.theta_init = m.map.to_theta(condex::Params{});
  const PipelineResult res = sample_posterior(*m.cl, m.priors, pc);
  const json artifact = {{"panel", fs::absolute(csv).string()},
                         {"settings", settings_json(s)},
                         {"names", m.map.layout().names()},
                         {"mle", as_vector(res.mode.mle.theta)},
                         {"mode", as_vector(res.mode.mode.theta)},
                         {"mode_u", as_vector(res.mode.mode.u)},
                         {"converged", res.mode.mode.converged},
                         {"status", res.mode.mode.status},
                         {"terms", m.cl->num_terms()},
                         {"sampler", g.sampler},
                         {"seed", g.seed},
                         {"checksum", res.unadjusted.checksum()},
                         {"draws_u", to_json(res.unadjusted.draws_u)},
                         {"warnings", res.warnings}};
  const fs::path out = g.out.empty() ? fs::path("fit") : fs::path(g.out);
  write_text(out / "fit.json", artifact.dump() + "\n");
  write_text(out / "unadjusted_draws.csv", draws_csv(res.unadjusted));
  std::cout << "mode:";
  for (Eigen::Index k = 0; k < res.mode.mode.theta.size(); ++k) std::cout << ' ' << m.map.layout().names()[static_cast<std::size_t>(k)] << '=' << res.mode.mode.theta(k);
  std::cout << "\n" << m.cl->num_terms() << " exceedance terms; artifact " << (out / "fit.json").string() << '\n';
  return res.mode.mode.converged ? 0 : 1;
}

int cmd_adjust(const Globals& g, const std::string& path) {
  const json a = read_json(path);
  const FitSettings s = settings_from(a.at("settings"));
  const PanelModel m = panel_model(a.at("panel").get<std::string>(), s);
  const Eigen::VectorXd mode_u = vector_from(a.at("mode_u"));
  PosteriorDraws draws = make_draws(m.map.layout(), matrix_from(a.at("draws_u")), mode_u,
                                    a.at("sampler").get<std::string>(), a.at("seed").get<std::uint64_t>());
  if (draws.checksum() != a.at("checksum").get<std::uint64_t>()) throw ConfigError("fit artifact draws do not match their checksum");
  const SandwichEstimate est = estimate_sandwich(*m.cl, vector_from(a.at("mode")));
  const PosteriorDraws adjusted = adjust_draws(draws, est);

  std::ostringstream iv;
  iv.precision(10);
  iv << "seed,parameter,level,method,lower,upper\n";
  for (double level : studies::kLevels) {
    const CredibleInterval cu = credible_interval(draws, level), ca = credible_interval(adjusted, level);
    for (std::size_t k = 0; k < m.map.layout().names().size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      iv << a.at("seed").get<std::uint64_t>() << ',' << m.map.layout().names()[k] << ',' << level << ",unadjusted," << cu.lower(kk) << ',' << cu.upper(kk) << '\n';
      iv << a.at("seed").get<std::uint64_t>() << ',' << m.map.layout().names()[k] << ',' << level << ",adjusted," << ca.lower(kk) << ',' << ca.upper(kk) << '\n';
    }
  }
  const fs::path out = g.out.empty() ? fs::path(path).parent_path() : fs::path(g.out);
  write_text(out / "sandwich.json", est.to_json().dump(2) + "\n");
  write_text(out / "adjusted_draws.csv", draws_csv(adjusted));
  write_text(out / "intervals.csv", iv.str());
  std::cout << iv.str();
  for (const auto& w : est.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

// ---- simulate ----

int cmd_simulate(const Globals& g, const std::string& config_path) {
  const json c = read_json(config_path);
  const std::string model = c.value("model", "condex-global");
  const json grid = c.value("grid", json::object());
  const SiteSet sites = SiteSet::grid(grid.value("nx", 13), grid.value("ny", grid.value("nx", 13)), grid.value("spacing", 2.0));
  const double t = condex::laplace_quantile(c.value("threshold_prob", 0.9975));
  const auto n = c.value("n", std::size_t{100});
  Rng rng = make_stream(g.seed, 0);

  Eigen::MatrixXd values;
  json info = {{"model", model}, {"seed", g.seed}, {"n", n}};
  if (model == "gaussian-exceedances") {
    const json f = c.value("field", json::object());
    values = condex::simulate_gaussian_exceedances(sites, MaternParams{1.0, f.value("range", 8.0), f.value("nu", 1.0)}, t, n, rng);
  } else {
    const json p = c.value("params", json::object());
    condex::Params q;
    q.lambda = p.value("lambda", q.lambda);
    q.kappa = p.value("kappa", q.kappa);
    q.sigma_b = p.value("sigma", q.sigma_b);
    q.rho_b = p.value("rho_b", q.rho_b);
    q.rho_z = p.value("rho", q.rho_z);
    q.tau = p.value("tau", q.tau);
    const condex::SpatialSampler sampler(q, sites, t);
    if (model == "condex-single") {
      values = condex::simulate_single_site(sampler, c.value("site", std::size_t{0}), n, rng);
    } else if (model == "condex-global") {
      const std::string path = c.value("path", "wadsworth");
      const auto batch = path == "keef" ? condex::simulate_global_keef(sampler, n, rng)
                                        : condex::simulate_global_wadsworth(sampler, n, rng);
      values = batch.replicates;
      info["acceptance"] = batch.acceptance();
      info["path"] = path;
    } else {
      throw ConfigError("unknown model '" + model + "'");
    }
  }
  const fs::path out = g.out.empty() ? fs::path("simulated") : fs::path(g.out);
  fs::create_directories(out);
  condex::write_panel_csv((out / "panel.csv").string(), condex::make_panel(sites, values));
  write_text(out / "simulate_manifest.json", json{{"config", c}, {"run", info}}.dump(2) + "\n");
  std::cout << "wrote " << values.rows() << " replicates x " << values.cols() << " sites to " << (out / "panel.csv").string()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Posterior adjustment for composite and misspecified likelihoods"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--reps", g.reps, "Replications (0 = study default)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--sampler", g.sampler, "Posterior sampler")->check(CLI::IsMember({"laplace", "mcmc"}));
  app.add_flag("--paper-scale", g.paper_scale, "Use the full replication counts");
  app.add_option("--draws", g.draws, "Posterior draws per fit")->check(CLI::PositiveNumber);
  app.add_option("--workers", g.workers, "Worker threads (0 = hardware concurrency)");
  app.add_option("--param", g.params, "Study parameter override key=value (repeatable)");

  std::string study_id;
  auto* study = app.add_subcommand("study", "Run a simulation study");
  study->add_option("id", study_id, "Study id")->required()->check(CLI::IsMember(studies::study_ids()));

  auto* selfcheck = app.add_subcommand("selfcheck", "Run quick internal consistency checks");

  std::string csv;
  FitSettings fs_;
  auto* fit = app.add_subcommand("fit", "Fit the global conditional extremes model to a panel CSV");
  fit->add_option("csv", csv, "Panel CSV (site-id,x-km,y-km,time-index,value)")->required()->check(CLI::ExistingFile);
  fit->add_option("--threshold-prob", fs_.threshold_prob, "Laplace quantile used as threshold");
  fit->add_option("--radius", fs_.radius, "Site selection radius around each conditioning site (<= 0: all)");
  fit->add_option("--conditioning", fs_.conditioning, "Comma-separated conditioning site ids, or 'all'");
  fit->add_flag("--pit", fs_.pit, "Transform values to Laplace margins first");
  fit->add_option("--pit-radius", fs_.pit_radius, "Pooling radius for the marginal transform");
  fit->add_option("--rho-b", fs_.rho_b, "'free' or a fixed value");
  fit->add_option("--window", fs_.window, "Time window for the J estimate");

  std::string artifact;
  auto* adjust = app.add_subcommand("adjust", "Adjust the posterior draws of a fit artifact");
  adjust->add_option("fit-artifact", artifact, "fit.json written by 'fit'")->required()->check(CLI::ExistingFile);

  std::string model_config;
  auto* simulate = app.add_subcommand("simulate", "Simulate a panel from a model config (JSON)");
  simulate->add_option("model-config", model_config, "Model config JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*study) return cmd_study(g, study_id);
    if (*selfcheck) return cmd_selfcheck(g);
    if (*fit) return cmd_fit(g, csv, fs_);
    if (*adjust) return cmd_adjust(g, artifact);
    if (*simulate) return cmd_simulate(g, model_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
