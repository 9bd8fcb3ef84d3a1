#include "postadj/sandwich.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "postadj/constants.hpp"
#include "postadj/numdiff.hpp"

namespace postadj {

namespace {

nlohmann::json matrix_to_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto p = n ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) {
      m(i, k) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
    }
  }
  return m;
}

FlooredSpd floored(const MatrixXd& m, const char* what, Warnings* warnings) {
  FlooredSpd f = floor_eigenvalues(m, tol::sandwich_eig_floor_rel);
  if (f.floored && warnings) {
    warnings->push_back(std::string(what) + ": eigenvalues floored at 1e-10 x spectral radius");
  }
  return f;
}

template <typename F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what());
  }
}

}  // namespace

nlohmann::json SandwichEstimate::to_json() const {
  nlohmann::json j;
  const auto& layout = theta_star.layout();
  j["names"] = layout.names();
  std::vector<std::string> links;
  for (auto l : layout.links()) links.push_back(l == Link::log ? "log" : "identity");
  j["links"] = links;
  j["theta_star"] = std::vector<double>(theta_star.values().data(),
                                        theta_star.values().data() + theta_star.size());
  j["H"] = matrix_to_json(H.matrix());
  j["J"] = matrix_to_json(J.matrix());
  j["godambe"] = matrix_to_json(godambe.matrix());
  j["C"] = matrix_to_json(C);
  j["window"] = window;
  j["floored"] = {{"H", h_floored}, {"J", j_floored}, {"godambe", godambe_floored}};
  j["warnings"] = warnings;
  return j;
}

SandwichEstimate SandwichEstimate::from_json(const nlohmann::json& j) {
  const auto names = j.at("names").get<std::vector<std::string>>();
  std::vector<Link> links;
  for (const auto& s : j.at("links").get<std::vector<std::string>>()) {
    links.push_back(s == "log" ? Link::log : Link::identity);
  }
  const auto ts = j.at("theta_star").get<std::vector<double>>();
  ParamLayout layout(names, links);
  ParamVector theta(layout, Eigen::Map<const VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size())));
  SandwichEstimate est{theta,
                       SpdMatrix(matrix_from_json(j.at("H"))),
                       SpdMatrix(matrix_from_json(j.at("J"))),
                       SpdMatrix(matrix_from_json(j.at("godambe"))),
                       matrix_from_json(j.at("C")),
                       j.at("window").get<std::size_t>(),
                       false,
                       false,
                       false,
                       {}};
  if (j.contains("floored")) {
    est.h_floored = j["floored"].value("H", false);
    est.j_floored = j["floored"].value("J", false);
    est.godambe_floored = j["floored"].value("godambe", false);
  }
  if (j.contains("warnings")) est.warnings = j["warnings"].get<Warnings>();
  const auto p = theta.size();
  if (est.H.dim() != p || est.J.dim() != p || est.godambe.dim() != p || est.C.rows() != p ||
      est.C.cols() != p) {
    throw DimensionError("SandwichEstimate: matrix dimensions do not match theta_star");
  }
  return est;
}

FlooredSpd estimate_H(const CompositeLikelihood& cl, const VectorXd& theta_star, Warnings* warnings) {
  const VectorXd u = cl.layout().unconstrained(theta_star);
  const MatrixXd hess = numeric_hessian(unconstrained_objective(cl), u);
  return floored(-hess, "estimate_H", warnings);
}

MatrixXd windowed_score_outer(const MatrixXd& weighted_scores, const std::vector<std::size_t>& times,
                              std::size_t window) {
  const Eigen::Index p = weighted_scores.cols();
  if (static_cast<std::size_t>(weighted_scores.rows()) != times.size()) {
    throw DimensionError("windowed_score_outer: one time index per score row required");
  }
  // Neighbourhoods depend on time only, so sum the scores within each time index first.
  std::map<std::size_t, VectorXd> by_time;
  for (std::size_t k = 0; k < times.size(); ++k) {
    auto [it, inserted] = by_time.try_emplace(times[k], VectorXd::Zero(p));
    it->second += weighted_scores.row(static_cast<Eigen::Index>(k)).transpose();
  }
  std::vector<std::size_t> t;
  std::vector<VectorXd> s;
  for (auto& [time, v] : by_time) {
    t.push_back(time);
    s.push_back(v);
  }
  MatrixXd out = MatrixXd::Zero(p, p);
  VectorXd win = VectorXd::Zero(p);
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (std::size_t a = 0; a < t.size(); ++a) {
    while (hi < t.size() && t[hi] <= t[a] + window) win += s[hi++];
    while (t[lo] + window < t[a]) win -= s[lo++];
    out += s[a] * win.transpose();
  }
  return symmetrize(out);
}

FlooredSpd estimate_J(const CompositeLikelihood& cl, const VectorXd& theta_star,
                      const NeighborStructure& nb, Warnings* warnings) {
  const VectorXd u = cl.layout().unconstrained(theta_star);
  const VectorFn terms = [&cl](const VectorXd& x) { return cl.term_values(cl.layout().natural(x)); };
  MatrixXd g = numeric_jacobian(terms, u);
  std::vector<std::size_t> times;
  times.reserve(cl.num_terms());
  for (std::size_t k = 0; k < cl.num_terms(); ++k) {
    g.row(static_cast<Eigen::Index>(k)) *= cl.keys()[k].weight;
    times.push_back(cl.keys()[k].time);
  }
  return floored(windowed_score_outer(g, times, nb.window), "estimate_J", warnings);
}

FlooredSpd godambe(const SpdMatrix& H, const SpdMatrix& J, Warnings* warnings) {
  const MatrixXd g = H.matrix() * spd_solve(J, H.matrix());
  return floored(symmetrize(g), "godambe", warnings);
}

MatrixXd build_C(const SpdMatrix& H, const SpdMatrix& godambe_info, Warnings* warnings) {
  if (H.dim() != godambe_info.dim()) throw DimensionError("build_C: dimension mismatch");
  const MatrixSqrtFactor m1 = spd_sqrt(SpdMatrix(H.inverse()), warnings);
  const MatrixSqrtFactor m2 = spd_sqrt(SpdMatrix(godambe_info.inverse()), warnings);
  const MatrixXd m1_inv_m2 = m1.factor.llt().solve(m2.factor);
  return m1_inv_m2.transpose();
}

SandwichEstimate estimate_sandwich(const CompositeLikelihood& cl, const VectorXd& theta_star) {
  Warnings w;
  FlooredSpd h = estimate_H(cl, theta_star, &w);
  FlooredSpd j = estimate_J(cl, theta_star, cl.neighbors(), &w);
  FlooredSpd g = godambe(h.matrix, j.matrix, &w);
  MatrixXd c = build_C(h.matrix, g.matrix, &w);
  SandwichEstimate est{ParamVector(cl.layout(), theta_star), h.matrix, j.matrix, g.matrix, c,
                       cl.neighbors().window, h.floored, j.floored, g.floored, std::move(w)};
  return est;
}

PosteriorDraws adjust_draws(const PosteriorDraws& draws, const SandwichEstimate& est) {
  const auto& layout = est.theta_star.layout();
  if (draws.draws_u.cols() != layout.size() || est.C.rows() != layout.size()) {
    throw DimensionError("adjust_draws: dimension mismatch");
  }
  const VectorXd ustar = est.theta_star.unconstrained();
  MatrixXd centred = draws.draws_u.rowwise() - ustar.transpose();
  MatrixXd adj = centred * est.C.transpose();
  adj.rowwise() += ustar.transpose();
  PosteriorDraws out = make_draws(layout, std::move(adj), draws.layout.unconstrained(draws.mode),
                                  "adjusted", draws.seed);
  out.source_checksum = draws.checksum();
  return out;
}

VectorXd sample_skewness(const MatrixXd& draws) {
  VectorXd out(draws.cols());
  for (Eigen::Index k = 0; k < draws.cols(); ++k) {
    const auto c = draws.col(k).array() - draws.col(k).mean();
    const double m2 = c.square().mean();
    const double m3 = c.cube().mean();
    out(k) = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  }
  return out;
}

PipelineResult sample_posterior(const CompositeLikelihood& cl, const PriorSet& priors,
                                const PipelineConfig& cfg) {
  PipelineResult res;
  const Posterior post(cl, priors);
  const VectorXd init = cfg.theta_init.size() ? cfg.theta_init : cl.layout().natural(VectorXd::Zero(cl.layout().size()));
  res.mode = staged("mode", [&] { return find_mode_two_step(post, init, cfg.optim); });
  if (!res.mode.mode.converged) res.warnings.push_back("mode: " + res.mode.mode.status);

  Rng rng = make_stream(cfg.seed, 0);
  const ScalarFn lp = post.unconstrained_fn();
  if (cfg.sampler == SamplerKind::laplace) {
    res.unadjusted = staged("sample", [&] {
      return laplace_sample(lp, cl.layout(), res.mode.mode.u, cfg.n_draws, rng, cfg.seed);
    });
  } else {
    McmcOptions mo = cfg.mcmc;
    if (mo.proposal_cov.size() == 0) {
      try {
        mo.proposal_cov = floor_eigenvalues(-numeric_hessian(lp, res.mode.mode.u), 1e-8).matrix.inverse();
        mo.initial_scale = 2.38 / std::sqrt(static_cast<double>(cl.layout().size()));
      } catch (const Error&) {
        mo.proposal_cov.resize(0, 0);
      }
    }
    McmcResult m = staged("sample", [&] {
      return mcmc_sample(lp, cl.layout(), res.mode.mode.u, cfg.n_draws, rng, mo, cfg.seed);
    });
    res.mcmc_tuning_failed = m.tuning_failed;
    if (m.tuning_failed) res.warnings.push_back("sample: MCMC acceptance below tuning threshold");
    res.unadjusted = std::move(m.draws);
  }
  res.skewness = sample_skewness(res.unadjusted.draws_u);
  return res;
}

PipelineResult full_adjustment_pipeline(const CompositeLikelihood& cl, const PriorSet& priors,
                                        const PipelineConfig& cfg) {
  PipelineResult res = sample_posterior(cl, priors, cfg);
  const VectorXd theta_star = cfg.theta_star_from_mle ? res.mode.mle.theta : res.mode.mode.theta;
  res.estimate = staged("sandwich", [&] { return estimate_sandwich(cl, theta_star); });
  for (const auto& w : res.estimate->warnings) res.warnings.push_back("sandwich: " + w);
  res.adjusted = staged("adjust", [&] { return adjust_draws(res.unadjusted, *res.estimate); });
  return res;
}

}  // namespace postadj
