#include "postadj/condex/pairwise.hpp"

#include <cmath>
#include <random>

#include "postadj/errors.hpp"
#include "postadj/optimize.hpp"

namespace postadj::condex {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double to_box(double u, double lo, double hi) { return lo + (hi - lo) / (1.0 + std::exp(-u)); }
double from_box(double x, double lo, double hi) {
  const double f = (x - lo) / (hi - lo);
  return std::log(f / (1.0 - f));
}

struct PairData {
  Eigen::VectorXd y0, y1;
};

PairData pair_data(const Eigen::MatrixXd& data, std::size_t s0, std::size_t s1, double threshold) {
  std::vector<double> a, b;
  for (Eigen::Index j = 0; j < data.rows(); ++j) {
    const double v0 = data(j, static_cast<Eigen::Index>(s0));
    const double v1 = data(j, static_cast<Eigen::Index>(s1));
    if (std::isfinite(v0) && v0 > threshold && std::isfinite(v1)) {
      a.push_back(v0);
      b.push_back(v1);
    }
  }
  PairData d;
  d.y0 = Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  d.y1 = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  return d;
}

}  // namespace

PairwiseEstimate fit_pair(const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, double distance,
                          PairwiseVariant variant, const PairwiseBounds& bb) {
  if (!(distance > 0.0)) throw ConfigError("fit_pair: degenerate pair at distance zero");
  if (y0.size() != y1.size() || y0.size() == 0) throw DimensionError("fit_pair: need matching non-empty samples");
  if ((y0.array() <= 0.0).any()) throw NumericDomainError("fit_pair: conditioning values must be positive");
  const bool has_gamma = variant == PairwiseVariant::fix_beta || variant == PairwiseVariant::free;
  const bool has_beta = variant == PairwiseVariant::fix_gamma || variant == PairwiseVariant::free;

  const auto unpack = [&](const Eigen::VectorXd& u, double& alpha, double& gamma, double& zeta, double& beta) {
    Eigen::Index k = 0;
    alpha = to_box(u(k++), bb.alpha_lo, bb.alpha_hi);
    zeta = to_box(u(k++), bb.zeta_lo, bb.zeta_hi);
    gamma = has_gamma ? to_box(u(k++), bb.gamma_lo, bb.gamma_hi) : 0.0;
    beta = has_beta ? to_box(u(k++), bb.beta_lo, bb.beta_hi) : 0.0;
  };
  const ScalarFn loglik = [&](const Eigen::VectorXd& u) {
    double alpha, gamma, zeta, beta;
    unpack(u, alpha, gamma, zeta, beta);
    double ll = 0.0;
    for (Eigen::Index j = 0; j < y0.size(); ++j) {
      const double sd = zeta * std::pow(y0(j), beta);
      const double r = (y1(j) - alpha * y0(j) - gamma) / sd;
      ll -= 0.5 * (kLog2Pi + r * r) + std::log(sd);
    }
    return ll;
  };

  Eigen::VectorXd u0(2 + (has_gamma ? 1 : 0) + (has_beta ? 1 : 0));
  Eigen::Index k = 0;
  u0(k++) = from_box(0.5 * (bb.alpha_lo + bb.alpha_hi) + 0.25 * (bb.alpha_hi - bb.alpha_lo), bb.alpha_lo, bb.alpha_hi);
  u0(k++) = from_box(std::min(1.0, 0.5 * (bb.zeta_lo + bb.zeta_hi)), bb.zeta_lo, bb.zeta_hi);
  if (has_gamma) u0(k++) = from_box(0.5 * (bb.gamma_lo + bb.gamma_hi), bb.gamma_lo, bb.gamma_hi);
  if (has_beta) u0(k++) = from_box(0.5 * (bb.beta_lo + bb.beta_hi), bb.beta_lo, bb.beta_hi);

  const OptimResult r = maximize(loglik, u0);
  PairwiseEstimate e;
  e.distance = distance;
  e.n = static_cast<std::size_t>(y0.size());
  unpack(r.x, e.alpha, e.gamma, e.zeta, e.beta);
  e.converged = r.converged;
  e.status = r.status;
  return e;
}

std::vector<PairwiseEstimate> fit_pairwise(const Eigen::MatrixXd& data, const SiteSet& sites, double threshold,
                                           std::size_t n_pairs, PairwiseVariant variant, Rng& rng,
                                           const PairwiseOptions& opts) {
  if (data.cols() != static_cast<Eigen::Index>(sites.size())) throw DimensionError("fit_pairwise: one column per site");
  if (sites.size() < 2) throw ConfigError("fit_pairwise: need at least two sites");
  std::uniform_int_distribution<std::size_t> pick(0, sites.size() - 1);
  std::vector<PairwiseEstimate> out;
  for (std::size_t n = 0; n < n_pairs; ++n) {
    std::size_t s0, s1;
    do {
      s0 = pick(rng);
      s1 = pick(rng);
    } while (s0 == s1 || sites.distance(s0, s1) == 0.0);
    const PairData d = pair_data(data, s0, s1, threshold);
    if (static_cast<std::size_t>(d.y0.size()) < opts.min_exceedances) continue;
    PairwiseEstimate e = fit_pair(d.y0, d.y1, sites.distance(s0, s1), variant, opts.bounds);
    if (!e.converged) continue;
    e.s0 = s0;
    e.s1 = s1;
    out.push_back(e);
  }
  return out;
}

std::vector<double> pairwise_residuals(const Eigen::MatrixXd& data, const SiteSet& sites, double threshold,
                                       const std::vector<PairwiseEstimate>& pairs, const Params& p) {
  std::vector<double> out;
  for (const auto& pr : pairs) {
    const double d = sites.distance(pr.s0, pr.s1);
    const double alpha = a_fn(d, 1.0, p);
    const double zeta = b_fn(d, p);
    const PairData pd = pair_data(data, pr.s0, pr.s1, threshold);
    for (Eigen::Index j = 0; j < pd.y0.size(); ++j) out.push_back((pd.y1(j) - alpha * pd.y0(j)) / zeta);
  }
  return out;
}

AlphaZetaFit fit_alpha_zeta(const Eigen::MatrixXd& data, const SiteSet& sites, double threshold,
                            const std::vector<PairwiseEstimate>& pairs) {
  std::vector<double> dist, y0, y1;
  for (const auto& pr : pairs) {
    const PairData pd = pair_data(data, pr.s0, pr.s1, threshold);
    for (Eigen::Index j = 0; j < pd.y0.size(); ++j) {
      dist.push_back(sites.distance(pr.s0, pr.s1));
      y0.push_back(pd.y0(j));
      y1.push_back(pd.y1(j));
    }
  }
  if (dist.empty()) throw ConfigError("fit_alpha_zeta: no exceedances among the pairs");
  const ScalarFn loglik = [&](const Eigen::VectorXd& u) {
    Params p;
    p.lambda = std::exp(u(0));
    p.kappa = std::exp(u(1));
    p.sigma_b = std::exp(u(2));
    p.rho_b = std::exp(u(3));
    double ll = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
      const double sd = b_fn(dist[j], p);
      const double r = (y1[j] - a_fn(dist[j], y0[j], p)) / sd;
      ll -= 0.5 * (kLog2Pi + r * r) + std::log(sd);
    }
    return ll;
  };
  Eigen::VectorXd u0(4);
  u0 << std::log(10.0), std::log(0.7), std::log(1.5), std::log(5.0);
  const OptimResult r = maximize(loglik, u0);
  return {std::exp(r.x(0)), std::exp(r.x(1)), std::exp(r.x(2)), std::exp(r.x(3)), r.converged};
}

}  // namespace postadj::condex
