#include "postadj/condex/simulate.hpp"

#include <cmath>
#include <random>

#include "postadj/constants.hpp"
#include "postadj/errors.hpp"

namespace postadj::condex {

namespace {

constexpr std::size_t kMinAttemptsForRateCheck = 100000;

double draw_exceedance(double t, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  return t + e(rng);
}

Eigen::VectorXd std_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd z(n);
  for (Eigen::Index k = 0; k < n; ++k) z(k) = nd(rng);
  return z;
}

void check_rate(std::size_t accepted, std::size_t attempts, const char* who) {
  if (attempts >= kMinAttemptsForRateCheck &&
      static_cast<double>(accepted) < tol::global_sampler_min_acceptance * static_cast<double>(attempts)) {
    throw ConfigError(std::string(who) + ": acceptance rate below 1e-4");
  }
}

GlobalSampleBatch start_batch(const ConditionalSampler& model, std::size_t n_reps) {
  GlobalSampleBatch b;
  b.replicates.resize(static_cast<Eigen::Index>(n_reps), static_cast<Eigen::Index>(model.dim()));
  b.path.reserve(n_reps);
  b.conditioned_on.reserve(n_reps);
  return b;
}

void finish_batch(GlobalSampleBatch& b, double t) {
  b.exceed = b.replicates.array() > t;
  for (Eigen::Index r = 0; r < b.replicates.rows(); ++r) {
    if (!b.exceed.row(r).any()) throw Error("global sampler produced a replicate without an exceedance");
  }
}

std::size_t pick(const std::vector<double>& cum, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, cum.back());
  const double x = u(rng);
  std::size_t i = 0;
  while (i + 1 < cum.size() && cum[i] <= x) ++i;
  return i;
}

std::vector<double> cumulative(const Eigen::VectorXd& w) {
  std::vector<double> cum(static_cast<std::size_t>(w.size()));
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) cum[static_cast<std::size_t>(i)] = (s += w(i));
  return cum;
}

bool is_max(const Eigen::VectorXd& x, std::size_t i) {
  return x.maxCoeff() <= x(static_cast<Eigen::Index>(i));
}

}  // namespace

SpatialSampler::SpatialSampler(const Params& p, SiteSet sites, double threshold)
    : SpatialSampler(std::vector<Params>(sites.size(), p), sites, threshold) {}

SpatialSampler::SpatialSampler(const std::vector<Params>& per_site, SiteSet sites, double threshold)
    : sites_(std::move(sites)), threshold_(threshold) {
  if (!std::isfinite(threshold)) throw NumericDomainError("SpatialSampler: threshold must be finite");
  if (sites_.size() == 0) throw ConfigError("SpatialSampler: no sites");
  if (per_site.size() != sites_.size()) throw DimensionError("SpatialSampler: one parameter set per site required");
  params_ = per_site.front();
  for (const auto& q : per_site) {
    q.validate();
    if (q.rho_z != params_.rho_z || q.nu_z != params_.nu_z) {
      throw ConfigError("SpatialSampler: residual field parameters must be shared by all sites");
    }
  }
  const auto n = static_cast<Eigen::Index>(sites_.size());
  const Eigen::MatrixXd dist = sites_.distance_matrix();
  decay_.resize(n, n);
  b_.resize(n, n);
  nugget_sd_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Params& q = per_site[static_cast<std::size_t>(i)];
    for (Eigen::Index s = 0; s < n; ++s) {
      decay_(s, i) = a_fn(dist(s, i), 1.0, q);
      b_(s, i) = b_fn(dist(s, i), q);
    }
    nugget_sd_(i) = 1.0 / std::sqrt(q.tau);
  }
  const Eigen::MatrixXd corr = matern_cov_matrix(sites_, MaternParams{1.0, params_.rho_z, params_.nu_z});
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) throw NotSpdError("SpatialSampler: residual correlation not positive definite");
  chol_ = llt.matrixL();
}

double SpatialSampler::exceed_prob(std::size_t) const { return 0.5 * std::exp(-threshold_); }

Eigen::VectorXd SpatialSampler::sample_given(std::size_t i, double y0, Rng& rng) const {
  const auto n = static_cast<Eigen::Index>(sites_.size());
  const Eigen::VectorXd z = chol_ * std_normal(n, rng);
  const auto ii = static_cast<Eigen::Index>(i);
  const Eigen::VectorXd eps = std_normal(n, rng) * nugget_sd_(ii);
  Eigen::VectorXd x = y0 * decay_.col(ii) + b_.col(ii).cwiseProduct(z) + eps;
  x(ii) = y0;
  return x;
}

BivariateSampler::BivariateSampler(double mu, double sigma, double alpha, double beta, double threshold)
    : mu_(mu), sigma_(sigma), alpha_(alpha), beta_(beta), threshold_(threshold) {
  if (!(sigma >= 0.0) || !std::isfinite(threshold) || threshold <= 0.0) {
    throw NumericDomainError("BivariateSampler: need sigma >= 0 and a positive finite threshold");
  }
}

double BivariateSampler::exceed_prob(std::size_t) const { return std::exp(-threshold_); }

Eigen::VectorXd BivariateSampler::sample_given(std::size_t i, double y0, Rng& rng) const {
  std::normal_distribution<double> nd;
  Eigen::VectorXd x(2);
  x(static_cast<Eigen::Index>(i)) = y0;
  x(static_cast<Eigen::Index>(1 - i)) = mu_ + alpha_ * y0 + sigma_ * std::pow(y0, beta_) * nd(rng);
  return x;
}

Eigen::MatrixXd simulate_single_site(const ConditionalSampler& model, std::size_t s0,
                                     std::size_t n_reps, Rng& rng) {
  if (s0 >= model.dim()) throw DimensionError("simulate_single_site: bad conditioning site");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_reps), static_cast<Eigen::Index>(model.dim()));
  for (std::size_t r = 0; r < n_reps; ++r) {
    out.row(static_cast<Eigen::Index>(r)) =
        model.sample_given(s0, draw_exceedance(model.threshold(), rng), rng).transpose();
  }
  return out;
}

std::string to_string(GlobalPath p) { return p == GlobalPath::keef ? "keef" : "wadsworth"; }

double GlobalSampleBatch::acceptance() const {
  return attempts ? static_cast<double>(replicates.rows()) / static_cast<double>(attempts) : 0.0;
}

GlobalSampleBatch simulate_global_wadsworth(const ConditionalSampler& model, std::size_t n_reps,
                                            Rng& rng, const GlobalOptions& opts) {
  if (model.dim() == 0) throw ConfigError("simulate_global_wadsworth: no sites");
  Eigen::VectorXd w(static_cast<Eigen::Index>(model.dim()));
  for (std::size_t i = 0; i < model.dim(); ++i) w(static_cast<Eigen::Index>(i)) = model.exceed_prob(i);
  const auto cum = cumulative(w);
  const double t = model.threshold();
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  GlobalSampleBatch b = start_batch(model, n_reps);
  const std::size_t cap = opts.max_attempts_per_rep * std::max<std::size_t>(n_reps, 1);
  std::size_t accepted = 0;
  while (accepted < n_reps) {
    if (b.attempts >= cap) throw ConfigError("simulate_global_wadsworth: attempt budget exhausted");
    ++b.attempts;
    const std::size_t i = pick(cum, rng);
    const Eigen::VectorXd x = model.sample_given(i, draw_exceedance(t, rng), rng);
    const auto k = static_cast<double>((x.array() > t).count());
    if (unif(rng) * k < 1.0) {
      b.replicates.row(static_cast<Eigen::Index>(accepted++)) = x.transpose();
      b.path.push_back(GlobalPath::wadsworth);
      b.conditioned_on.push_back(i);
    }
    check_rate(accepted, b.attempts, "simulate_global_wadsworth");
  }
  finish_batch(b, t);
  return b;
}

Eigen::VectorXd keef_max_probs(const ConditionalSampler& model, std::size_t n_pilot, Rng& rng) {
  if (n_pilot == 0) throw ConfigError("keef_max_probs: pilot size must be positive");
  Eigen::VectorXd p(static_cast<Eigen::Index>(model.dim()));
  for (std::size_t i = 0; i < model.dim(); ++i) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < n_pilot; ++r) {
      if (is_max(model.sample_given(i, draw_exceedance(model.threshold(), rng), rng), i)) ++hits;
    }
    p(static_cast<Eigen::Index>(i)) = static_cast<double>(hits) / static_cast<double>(n_pilot);
  }
  return p;
}

GlobalSampleBatch simulate_global_keef(const ConditionalSampler& model, std::size_t n_reps,
                                       Rng& rng, const GlobalOptions& opts) {
  if (model.dim() == 0) throw ConfigError("simulate_global_keef: no sites");
  const Eigen::VectorXd pmax = model.dim() == 1 ? Eigen::VectorXd::Ones(1)
                                                : keef_max_probs(model, opts.pilot_per_site, rng);
  Eigen::VectorXd w(pmax.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = model.exceed_prob(static_cast<std::size_t>(i)) * pmax(i);
  if (!(w.sum() > 0.0)) throw ConfigError("simulate_global_keef: no site was ever the maximum in the pilot");
  const auto cum = cumulative(w);
  const double t = model.threshold();

  GlobalSampleBatch b = start_batch(model, n_reps);
  const std::size_t cap = opts.max_attempts_per_rep * std::max<std::size_t>(n_reps, 1);
  for (std::size_t r = 0; r < n_reps; ++r) {
    const std::size_t i = pick(cum, rng);
    std::size_t tries = 0;
    for (;;) {
      if (b.attempts >= cap) throw ConfigError("simulate_global_keef: attempt budget exhausted");
      ++b.attempts;
      ++tries;
      const Eigen::VectorXd x = model.sample_given(i, draw_exceedance(t, rng), rng);
      if (is_max(x, i)) {
        b.replicates.row(static_cast<Eigen::Index>(r)) = x.transpose();
        break;
      }
      check_rate(r, b.attempts, "simulate_global_keef");
    }
    b.path.push_back(GlobalPath::keef);
    b.conditioned_on.push_back(i);
  }
  finish_batch(b, t);
  return b;
}

double laplace_from_normal(double z) {
  // Work with the smaller tail probability to keep precision far out.
  const double tail = 0.5 * std::erfc(std::abs(z) / std::sqrt(2.0));
  const double y = -std::log(2.0 * tail);
  return z < 0.0 ? -y : y;
}

Eigen::MatrixXd simulate_gaussian_exceedances(const SiteSet& sites, const MaternParams& field,
                                              double threshold, std::size_t n_reps, Rng& rng) {
  field.validate();
  const Eigen::MatrixXd cov = matern_cov_matrix(sites, field);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NotSpdError("simulate_gaussian_exceedances: covariance not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const double sd = std::sqrt(field.sigma2);
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_reps), n);
  std::size_t kept = 0;
  std::size_t attempts = 0;
  while (kept < n_reps) {
    ++attempts;
    const Eigen::VectorXd z = L * std_normal(n, rng);
    Eigen::VectorXd y(n);
    for (Eigen::Index s = 0; s < n; ++s) y(s) = laplace_from_normal(z(s) / sd);
    if (y.maxCoeff() > threshold) out.row(static_cast<Eigen::Index>(kept++)) = y.transpose();
    check_rate(kept, attempts, "simulate_gaussian_exceedances");
  }
  return out;
}

}  // namespace postadj::condex
