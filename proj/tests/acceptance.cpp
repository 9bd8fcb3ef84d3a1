// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "postadj/condex/likelihood.hpp"
#include "postadj/gaussian_models.hpp"
#include "postadj/numdiff.hpp"
#include "postadj/sandwich.hpp"
#include "postadj/studies/studies.hpp"

using namespace postadj;
using namespace postadj::studies;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  std::string out = "acceptance_results";
  std::set<int> only;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

std::string pct(double v) { return fmt(100.0 * v, 4) + "%"; }

std::size_t param_index(const CoverageTable& t, const std::string& name) {
  const auto it = std::find(t.params.begin(), t.params.end(), name);
  if (it == t.params.end()) throw ConfigError("no parameter " + name);
  return static_cast<std::size_t>(it - t.params.begin());
}

StudyResult run(const Options& o, const std::string& id, std::size_t reps, nlohmann::json params = nlohmann::json::object(),
                const std::string& tag = "") {
  StudyConfig cfg;
  cfg.study = id;
  cfg.reps = reps;
  cfg.seed = o.seed;
  cfg.workers = o.workers;
  cfg.params = std::move(params);
  StudyResult r = run_study(cfg);
  emit_outputs(r, (fs::path(o.out) / (tag.empty() ? id : tag)).string());
  return r;
}

std::string used(const StudyResult& r) {
  return std::to_string(r.table.reps_used) + "/" + std::to_string(r.table.reps_requested) + " reps";
}

// 1
Outcome defining_equation() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> dim(2, 8);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index p = dim(rng);
    const SpdMatrix h(oracle::random_spd(p, rng));
    const SpdMatrix info(oracle::random_spd(p, rng));
    const Eigen::MatrixXd c = build_C(h, info);
    const Eigen::MatrixXd target = info.matrix().inverse();
    worst = std::max(worst, (c * h.matrix().inverse() * c.transpose() - target).norm() / target.norm());
  }
  return {worst < 1e-8, "max relative error " + fmt(worst) + " (< 1e-8)"};
}

// 2
Outcome fisher_reduction(const Options& o) {
  Rng rng = rep_stream(o.seed, data_stream, 0);
  std::normal_distribution<double> nd;
  Eigen::VectorXd y(10000);
  for (auto& v : y) v = 1.0 + 2.0 * nd(rng);
  const CompositeLikelihood cl = gaussian_iid_loglik(y);
  const double mu = y.mean();
  const SandwichEstimate est = estimate_sandwich(cl, Eigen::Vector2d(mu, std::sqrt((y.array() - mu).square().mean())));
  const double jh = relative_frobenius(est.J.matrix(), est.H.matrix());
  const double ci = (est.C - Eigen::MatrixXd::Identity(2, 2)).jacobiSvd().singularValues()(0);
  return {jh < 0.1 && ci < 0.1, "|J-H|_F/|H|_F = " + fmt(jh) + ", |C-I|_2 = " + fmt(ci) + " (both < 0.1)"};
}

// 3
Outcome student_t(const Options& o) {
  const StudyResult r = run(o, "student-t", 200);
  const double u = r.table.rate(unadjusted, 0, 1), a = r.table.rate(adjusted, 0, 1);
  const double n = static_cast<double>(r.table.reps_used);
  const double su = 3.0 * std::sqrt(0.13 * 0.87 / n), sa = 3.0 * std::sqrt(0.98 * 0.02 / n);
  const bool ok = u <= 0.25 && a >= 0.90 && std::abs(u - 0.13) <= su && std::abs(a - 0.98) <= sa;
  return {ok, "95% coverage unadjusted " + pct(u) + " (<= 25%, 13% +- " + pct(su) + "), adjusted " + pct(a) +
                  " (>= 90%, 98% +- " + pct(sa) + "), " + used(r)};
}

// 4
Outcome block_composite(const Options& o) {
  const StudyResult r = run(o, "block-composite", 100);
  const auto& t = r.table;
  const auto rho = param_index(t, "rho"), sig = param_index(t, "sigma"), tau = param_index(t, "tau");
  bool ok = true;
  std::string d;
  for (auto k : {rho, sig}) {
    const double u = t.rate(unadjusted, k, 1), a = t.rate(adjusted, k, 1);
    ok = ok && u < 0.85 && std::abs(a - 0.95) <= 0.07;
    d += t.params[k] + " " + pct(u) + " -> " + pct(a) + ", ";
  }
  const double tu = t.rate(unadjusted, tau, 1), ta = t.rate(adjusted, tau, 1);
  ok = ok && ta >= tu - 0.07;
  d += "tau " + pct(tu) + " -> " + pct(ta) + " (95% level; unadjusted < 85%, adjusted 95 +- 7 pp, tau drop <= 7 pp), " + used(r);
  return {ok, d};
}

// 5
Outcome coarse_grid(const Options& o) {
  const StudyResult r = run(o, "coarse-grid", 100);
  const auto& t = r.table;
  bool ok = true;
  std::string d;
  for (const char* name : {"rho", "sigma"}) {
    const auto k = param_index(t, name);
    d += std::string(name) + " adjusted";
    for (std::size_t l = 0; l < kLevels.size(); ++l) {
      const double a = t.rate(adjusted, k, l);
      ok = ok && std::abs(a - kLevels[l]) <= 0.07;
      d += " " + pct(a);
    }
    d += ", ";
  }
  const auto tau = param_index(t, "tau");
  const double ta = t.rate(adjusted, tau, 1);
  ok = ok && ta >= 0.85;
  d += "tau 95% " + pct(t.rate(unadjusted, tau, 1)) + " -> " + pct(ta) + " (levels 90/95/99 within 7 pp; tau >= 85%), " + used(r);
  return {ok, d};
}

// 6
Outcome self_inconsistency(const Options& o) {
  const StudyResult r = run(o, "self-inconsistency", 1, {{"samples", 1000000}});
  const auto& q = r.extra.at("quadrature");
  const auto& mc = r.extra.at("monte_carlo");
  const double pk = q.at("p_keef"), pw = q.at("p_wadsworth"), mk = mc.at("p_keef"), mw = mc.at("p_wadsworth");
  const bool ok = q.at("converged").get<bool>() && std::abs(pk - 0.17) <= 0.005 && std::abs(pw - 0.37) <= 0.005 &&
                  std::abs(mk - pk) <= 0.02 && std::abs(mw - pw) <= 0.02;
  return {ok, "quadrature (" + fmt(pk, 4) + ", " + fmt(pw, 4) + ") vs (0.17, 0.37) +- 0.005; Monte Carlo (" + fmt(mk, 4) +
                  ", " + fmt(mw, 4) + ") within 0.02 at 1e6 samples"};
}

// 7
Outcome condex_oracle() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(u(rng) * 7.0);  // 2..8 sites
    std::vector<oracle::XY> xy;
    std::vector<Site> sites;
    for (std::size_t s = 0; s < n; ++s) {
      xy.push_back({20.0 * u(rng), 20.0 * u(rng)});
      sites.push_back(xy.back());
    }
    const oracle::CondexParams op{1.0 + 30.0 * u(rng), 0.2 + 1.8 * u(rng), 0.3 + 3.0 * u(rng),
                                  0.5 + 20.0 * u(rng), 1.0 + 40.0 * u(rng), 1.0 + 50.0 * u(rng)};
    const std::size_t s0 = static_cast<std::size_t>(u(rng) * static_cast<double>(n)) % n;
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (auto& v : y) v = 3.0 * nd(rng);
    y(static_cast<Eigen::Index>(s0)) = 4.0 + 3.0 * u(rng);
    condex::Params p;
    p.lambda = op.lambda;
    p.kappa = op.kappa;
    p.sigma_b = op.sigma_b;
    p.rho_b = op.rho_b;
    p.rho_z = op.rho_z;
    p.tau = op.tau;
    const double ref = oracle::condex_loglik(op, xy, y, s0);
    const double got = condex::condex_loglik(p, SiteSet(sites), y, s0);
    worst = std::max(worst, std::abs(got - ref) / std::max(1.0, std::abs(ref)));
  }
  return {worst <= 1e-10, "max |diff| / max(1, |oracle|) = " + fmt(worst) + " over 50 draws (<= 1e-10)"};
}

// 8
Outcome condex_direction(const Options& o) {
  const StudyResult g = run(o, "condex-global", 50, {{"rho_b", "free"}}, "condex-global-free");
  std::size_t improved = 0;
  std::string d = "global 95%:";
  for (std::size_t k = 0; k < g.table.params.size(); ++k) {
    const double u = g.table.rate(unadjusted, k, 1), a = g.table.rate(adjusted, k, 1);
    if (a > u) ++improved;
    d += " " + g.table.params[k] + " " + pct(u) + "->" + pct(a);
  }
  d += " (" + std::to_string(improved) + "/" + std::to_string(g.table.params.size()) + " improved, need >= 5; " + used(g) + ")";
  const StudyResult s = run(o, "condex-gaussian-s2", 50);
  double lo = 1.0;
  d += "; Gaussian-field variant adjusted 95%:";
  for (std::size_t k = 0; k < s.table.params.size(); ++k) {
    lo = std::min(lo, s.table.rate(adjusted, k, 1));
    d += " " + s.table.params[k] + " " + pct(s.table.rate(adjusted, k, 1));
  }
  d += " (min >= 85%; " + used(s) + ")";
  return {improved >= 5 && g.table.params.size() == 6 && s.table.params.size() == 5 && lo >= 0.85, d};
}

// 9
Outcome numdiff() {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double g1 = 0.0, h1 = 0.0, g2 = 0.0, h2 = 0.0, g3 = 0.0, h3 = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd y(40);
    for (auto& v : y) v = -1.0 + 3.0 * u(rng) + nd(rng);
    const CompositeLikelihood iid = gaussian_iid_loglik(y);
    const auto f = unconstrained_objective(iid);
    const Eigen::Vector2d x(-2.0 + 4.0 * u(rng), -1.0 + 2.0 * u(rng));
    const auto r1 = oracle::gaussian_iid(y, x(0), x(1));
    g1 = std::max(g1, oracle::rel_err(numeric_gradient(f, x), r1.grad));
    h1 = std::max(h1, oracle::rel_err(numeric_hessian(f, x), r1.hess));

    const CompositeLikelihood fixed = gaussian_fixed_var_loglik(y);
    const auto f2 = unconstrained_objective(fixed);
    const Eigen::VectorXd m = Eigen::VectorXd::Constant(1, -2.0 + 4.0 * u(rng));
    const auto r2 = oracle::gaussian_fixed_var(y, m(0));
    g2 = std::max(g2, oracle::rel_err(numeric_gradient(f2, m), r2.grad));
    h2 = std::max(h2, oracle::rel_err(numeric_hessian(f2, m), r2.hess));

    Eigen::VectorXd th(5);
    th << 2.0 + 28.0 * u(rng), 0.3 + 1.5 * u(rng), 0.5 + 2.5 * u(rng), 1.0 + 19.0 * u(rng), 2.0 + 48.0 * u(rng);
    const double d = 0.5 + 14.5 * u(rng), y0 = 4.0 + 3.0 * u(rng);
    const double yo = y0 * std::exp(-std::pow(d / th(0), th(1))) + nd(rng);
    const SiteSet two(std::vector<Site>{{0.0, 0.0}, {d, 0.0}});
    const ScalarFn f3 = [&](const Eigen::VectorXd& t) {
      condex::Params p;
      p.lambda = t(0);
      p.kappa = t(1);
      p.sigma_b = t(2);
      p.rho_b = t(3);
      p.tau = t(4);
      return condex::condex_loglik(p, two, Eigen::Vector2d(y0, yo), 0);
    };
    const auto r3 = oracle::condex_one_site(y0, yo, d, th);
    g3 = std::max(g3, oracle::rel_err(numeric_gradient(f3, th), r3.grad));
    h3 = std::max(h3, oracle::rel_err(numeric_hessian(f3, th), r3.hess));
  }
  const double worst = std::max({g1, h1, g2, h2, g3, h3});
  return {worst < 1e-5, "max relative error gradient/Hessian: Gaussian " + fmt(g1) + "/" + fmt(h1) + ", fixed-variance " +
                            fmt(g2) + "/" + fmt(h2) + ", one-site conditional extremes " + fmt(g3) + "/" + fmt(h3) +
                            " (< 1e-5, 100 points each)"};
}

// 10
Outcome determinism(const Options& o) {
  const std::vector<std::pair<std::string, nlohmann::json>> small{
      {"student-t", {}},
      {"coarse-grid", {{"n_sites", 100}, {"replicates", 20}, {"oracle_n", 500}}},
      {"block-composite", {{"n_sites", 100}, {"replicates", 20}}},
      {"condex-global", {{"replicates", 30}, {"oracle_n", 2000}}},
      {"condex-gaussian-s2", {{"replicates", 100}, {"oracle_n", 2000}}},
      {"self-inconsistency", {{"samples", 100000}}},
      {"logscore", {{"replicates", 200}, {"single_site_models", 1}}}};
  std::size_t files = 0;
  std::vector<std::string> differing;
  for (const auto& [id, params] : small) {
    std::vector<fs::path> dirs;
    for (int pass = 0; pass < 2; ++pass) {
      StudyConfig cfg;
      cfg.study = id;
      cfg.reps = 3;
      cfg.seed = o.seed;
      cfg.workers = o.workers;
      cfg.n_draws = 1000;
      cfg.params = params;
      const fs::path dir = fs::path(o.out) / "determinism" / (id + "-" + std::to_string(pass));
      fs::remove_all(dir);
      emit_outputs(run_study(cfg), dir.string());
      dirs.push_back(dir);
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      const std::string name = e.path().filename().string();
      if (name == "manifest.json") continue;  // carries the wall time
      std::ifstream a(e.path(), std::ios::binary), b(dirs[1] / name, std::ios::binary);
      const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
      ++files;
      if (sa != sb || sa.empty()) differing.push_back(id + "/" + name);
    }
  }
  std::string d = std::to_string(files) + " tables over " + std::to_string(small.size()) + " studies compared byte for byte";
  for (const auto& f : differing) d += "; differs: " + f;
  return {differing.empty() && files >= small.size(), d};
}

// 11
Outcome logscore(const Options& o) {
  const StudyResult r = run(o, "logscore", 1);
  const auto& c = r.extra.at("comparisons");
  if (c.empty() || c.at(0).at("unadjusted").get<std::string>() != "global") return {false, "global fit failed"};
  const double f = c.at(0).at("fraction_better");
  std::string d = "global adjusted beats unadjusted at " + pct(f) + " of " +
                  std::to_string(r.extra.at("held_out_sites").get<std::size_t>()) + " held-out sites (> 60%)";
  for (std::size_t k = 1; k < c.size(); ++k) {
    d += "; " + c.at(k).at("unadjusted").get<std::string>() + " " + pct(c.at(k).at("fraction_better").get<double>());
  }
  return {f > 0.6, d};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  Options o;
  std::vector<int> only;
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--workers", o.workers, "Worker threads (0 = hardware concurrency)");
  app.add_option("--out", o.out, "Directory for study outputs");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  o.only.insert(only.begin(), only.end());

  struct Criterion {
    int id;
    std::string name;
    double max_seconds;  // 0 = no runtime bound
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria{
      {1, "adjustment defining equation", 1.0, defining_equation},
      {2, "Fisher reduction", 10.0, [&] { return fisher_reduction(o); }},
      {3, "student-t coverage direction", 120.0, [&] { return student_t(o); }},
      {4, "block composite coverage direction", 1800.0, [&] { return block_composite(o); }},
      {5, "coarse grid non-degradation", 0.0, [&] { return coarse_grid(o); }},
      {6, "self-inconsistency golden values", 300.0, [&] { return self_inconsistency(o); }},
      {7, "conditional extremes likelihood oracle", 0.0, condex_oracle},
      {8, "conditional extremes coverage direction", 0.0, [&] { return condex_direction(o); }},
      {9, "numerical differentiation", 0.0, numdiff},
      {10, "determinism", 0.0, [&] { return determinism(o); }},
      {11, "log-score ranking direction", 0.0, [&] { return logscore(o); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!o.only.empty() && !o.only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.max_seconds > 0.0 && secs >= c.max_seconds) {
      out.pass = false;
      out.detail += "; runtime over " + fmt(c.max_seconds) + " s";
    }
    if (!out.pass) ++failed;
    std::cout << (out.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << out.detail << " ("
              << fmt(secs, 3) << " s)" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
