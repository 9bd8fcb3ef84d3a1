#include "postadj/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "postadj/errors.hpp"
#include "postadj/matrix_kit.hpp"

namespace postadj {

Posterior::Posterior(const CompositeLikelihood& cl, PriorSet priors)
    : cl_(&cl), priors_(std::move(priors)) {}

double Posterior::log_posterior(const Eigen::VectorXd& natural) const {
  return cl_->value(natural) + priors_.log_density(natural);
}

double Posterior::log_posterior_unconstrained(const Eigen::VectorXd& u) const {
  return cl_->value(layout().natural(u)) + priors_.log_density_unconstrained(u);
}

ScalarFn Posterior::unconstrained_fn() const {
  return [this](const Eigen::VectorXd& u) { return log_posterior_unconstrained(u); };
}

double log_posterior(const CompositeLikelihood& cl, const PriorSet& priors, const ParamVector& theta) {
  return eval_composite(cl, theta) + priors.log_density(theta.values());
}

ModeResult find_mode(const ScalarFn& logpost_u, const ParamLayout& layout,
                     const Eigen::VectorXd& theta_init, const OptimOptions& opts) {
  layout.validate_natural(theta_init);
  const OptimResult r = maximize(logpost_u, layout.unconstrained(theta_init), opts);
  ModeResult m;
  m.u = r.x;
  m.theta = layout.natural(r.x);
  m.value = r.value;
  m.grad_norm = r.grad.size() ? r.grad.norm() : std::numeric_limits<double>::quiet_NaN();
  m.iterations = r.iterations;
  m.converged = r.converged;
  m.status = r.status;
  return m;
}

TwoStepMode find_mode_two_step(const Posterior& post, const Eigen::VectorXd& theta_init,
                               const OptimOptions& opts) {
  TwoStepMode out;
  out.mle = find_mode(unconstrained_objective(post.likelihood()), post.layout(), theta_init, opts);
  const Eigen::VectorXd start = out.mle.theta.allFinite() ? out.mle.theta : theta_init;
  out.mode = find_mode(post.unconstrained_fn(), post.layout(), start, opts);
  return out;
}

std::uint64_t matrix_checksum(const Eigen::MatrixXd& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
  const std::size_t n = static_cast<std::size_t>(m.size()) * sizeof(double);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t PosteriorDraws::checksum() const { return matrix_checksum(draws_u); }

PosteriorDraws make_draws(const ParamLayout& layout, Eigen::MatrixXd draws_u,
                          const Eigen::VectorXd& mode_u, std::string sampler, std::uint64_t seed) {
  PosteriorDraws d;
  d.layout = layout;
  d.draws.resize(draws_u.rows(), draws_u.cols());
  for (Eigen::Index i = 0; i < draws_u.rows(); ++i) {
    d.draws.row(i) = layout.natural(draws_u.row(i).transpose()).transpose();
  }
  if (!d.draws.allFinite()) throw NumericDomainError("posterior draws: non-finite values");
  d.draws_u = std::move(draws_u);
  d.mode = layout.natural(mode_u);
  d.sampler = std::move(sampler);
  d.seed = seed;
  d.source_checksum = d.checksum();
  return d;
}

PosteriorDraws laplace_sample(const ScalarFn& logpost_u, const ParamLayout& layout,
                              const Eigen::VectorXd& mode_u, Eigen::Index n_s, Rng& rng,
                              std::uint64_t seed) {
  if (n_s < 1) throw DimensionError("laplace_sample: need at least one draw");
  const Eigen::MatrixXd neg_hess = -numeric_hessian(logpost_u, mode_u);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(neg_hess));
  const double top = es.eigenvalues().maxCoeff();
  const double bottom = es.eigenvalues().minCoeff();
  if (!(top > 0.0) || bottom < -1e-6 * top) {
    throw NotSpdError("laplace_sample: negative Hessian at the mode is indefinite; use the MCMC sampler");
  }
  const FlooredSpd prec = floor_eigenvalues(neg_hess, tol::sandwich_eig_floor_rel);
  const SpdMatrix cov(prec.matrix.inverse());
  Eigen::MatrixXd u = mvn_sample(mode_u, cov, n_s, rng);
  return make_draws(layout, std::move(u), mode_u, "laplace", seed);
}

McmcResult mcmc_sample(const ScalarFn& logpost_u, const ParamLayout& layout,
                       const Eigen::VectorXd& u_init, Eigen::Index n_s, Rng& rng,
                       const McmcOptions& opts, std::uint64_t seed) {
  const Eigen::Index p = u_init.size();
  if (n_s < 1) throw DimensionError("mcmc_sample: need at least one draw");
  auto eval = [&](const Eigen::VectorXd& u) {
    try {
      const double v = logpost_u(u);
      return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  Eigen::MatrixXd cov = opts.proposal_cov.size() == p * p
                            ? opts.proposal_cov
                            : Eigen::MatrixXd(Eigen::MatrixXd::Identity(p, p));
  double log_scale = std::log(opts.initial_scale);
  Eigen::LLT<Eigen::MatrixXd> chol(cov);
  if (chol.info() != Eigen::Success) throw NotSpdError("mcmc_sample: proposal covariance not SPD");
  Eigen::MatrixXd l = chol.matrixL();

  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::VectorXd u = u_init;
  double lp = eval(u);
  if (!std::isfinite(lp)) throw EvaluationError("mcmc_sample: log posterior not finite at start");

  // Running moments of the burn-in chain for covariance adaptation.
  Eigen::VectorXd run_mean = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd run_m2 = Eigen::MatrixXd::Zero(p, p);
  Eigen::Index run_n = 0;
  bool shape_learned = false;

  Eigen::MatrixXd out(n_s, p);
  Eigen::Index accepted_after = 0;
  const Eigen::Index total = opts.burn_in + n_s;
  Eigen::VectorXd z(p);
  for (Eigen::Index it = 0; it < total; ++it) {
    for (Eigen::Index k = 0; k < p; ++k) z(k) = norm(rng);
    const Eigen::VectorXd prop = u + std::exp(log_scale) * (l * z);
    const double lpp = eval(prop);
    bool acc = false;
    if (std::isfinite(lpp)) {
      const double log_ratio = lpp - lp;
      acc = log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio;
    } else {
      (void)unif(rng);
    }
    if (acc) {
      u = prop;
      lp = lpp;
    }
    if (it < opts.burn_in) {
      const double gamma = 1.0 / std::pow(static_cast<double>(it + 1), 0.6);
      log_scale += gamma * ((acc ? 1.0 : 0.0) - opts.target_acceptance);
      ++run_n;
      const Eigen::VectorXd delta = u - run_mean;
      run_mean += delta / static_cast<double>(run_n);
      run_m2 += delta * (u - run_mean).transpose();
      if (run_n >= 200 && run_n % 100 == 0) {
        Eigen::MatrixXd emp = run_m2 / static_cast<double>(run_n - 1);
        emp.diagonal().array() += 1e-10;
        Eigen::LLT<Eigen::MatrixXd> c2(symmetrize(emp));
        if (c2.info() == Eigen::Success) {
          // Restart the scale from the usual 2.38 / sqrt(p) once the shape is first learned.
          l = c2.matrixL();
          if (!shape_learned) log_scale = std::log(2.38 / std::sqrt(static_cast<double>(p)));
          shape_learned = true;
        }
      }
    } else {
      if (acc) ++accepted_after;
      out.row(it - opts.burn_in) = u.transpose();
    }
  }
  McmcResult res;
  res.acceptance = static_cast<double>(accepted_after) / static_cast<double>(n_s);
  res.tuning_failed = res.acceptance < tol::mcmc_min_acceptance;
  res.draws = make_draws(layout, std::move(out), u_init, "mcmc", seed);
  return res;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw DimensionError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

CredibleInterval credible_interval(const Eigen::MatrixXd& draws, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("credible_interval: level must be in (0, 1)");
  if (draws.rows() < 1) throw DimensionError("credible_interval: no draws");
  CredibleInterval ci;
  ci.level = level;
  ci.lower.resize(draws.cols());
  ci.upper.resize(draws.cols());
  const double alpha = 1.0 - level;
  for (Eigen::Index k = 0; k < draws.cols(); ++k) {
    std::vector<double> col(draws.col(k).data(), draws.col(k).data() + draws.rows());
    ci.lower(k) = quantile(col, alpha / 2.0);
    ci.upper(k) = quantile(std::move(col), 1.0 - alpha / 2.0);
  }
  return ci;
}

CredibleInterval credible_interval(const PosteriorDraws& draws, double level) {
  return credible_interval(draws.draws, level);
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

LogScore log_score(const std::function<double(const Eigen::VectorXd&)>& loglik,
                   const Eigen::MatrixXd& draws) {
  if (draws.rows() < 1) throw DimensionError("log_score: no draws");
  Eigen::VectorXd ll(draws.rows());
  for (Eigen::Index i = 0; i < draws.rows(); ++i) ll(i) = loglik(draws.row(i).transpose());
  LogScore s;
  const double m = ll.maxCoeff();
  if (m == -std::numeric_limits<double>::infinity()) {
    s.value = m;
    s.all_neg_inf = true;
    return s;
  }
  s.value = log_sum_exp(ll) - std::log(static_cast<double>(draws.rows()));
  return s;
}

}  // namespace postadj
