#include "postadj/random_fields.hpp"

#include <cmath>
#include <random>
#include <set>

#include "postadj/constants.hpp"
#include "postadj/errors.hpp"

namespace postadj {

double MaternParams::kappa() const { return std::sqrt(8.0 * nu) / rho; }

void MaternParams::validate() const {
  if (!(sigma2 > 0.0) || !(rho > 0.0) || !(nu > 0.0) || !std::isfinite(sigma2) ||
      !std::isfinite(rho) || !std::isfinite(nu)) {
    throw NumericDomainError("MaternParams: sigma2, rho and nu must be positive and finite");
  }
}

double matern_corr(double d, double rho, double nu) {
  if (d < 0.0) throw NumericDomainError("matern_corr: negative distance");
  if (d == 0.0) return 1.0;
  const double x = std::sqrt(8.0 * nu) / rho * d;
  if (nu == 0.5) return std::exp(-x);
  if (nu == 1.5) return (1.0 + x) * std::exp(-x);
  if (nu == 2.5) return (1.0 + x + x * x / 3.0) * std::exp(-x);
  if (x > 700.0) return 0.0;
  return std::pow(x, nu) * std::cyl_bessel_k(nu, x) / (std::pow(2.0, nu - 1.0) * std::tgamma(nu));
}

double matern_cov(double d, const MaternParams& p) {
  return p.sigma2 * matern_corr(d, p.rho, p.nu);
}

double matern_cov_bessel(double d, const MaternParams& p) {
  if (d < 0.0) throw NumericDomainError("matern_cov_bessel: negative distance");
  if (d == 0.0) return p.sigma2;
  const double x = p.kappa() * d;
  return p.sigma2 * std::pow(x, p.nu) * std::cyl_bessel_k(p.nu, x) /
         (std::pow(2.0, p.nu - 1.0) * std::tgamma(p.nu));
}

SiteSet::SiteSet(std::vector<Site> coords) : coords_(std::move(coords)) {
  for (const auto& c : coords_) {
    if (!std::isfinite(c[0]) || !std::isfinite(c[1])) {
      throw NumericDomainError("SiteSet: non-finite coordinate");
    }
  }
}

SiteSet SiteSet::grid(std::size_t nx, std::size_t ny, double spacing, Site origin) {
  std::vector<Site> c;
  c.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      c.push_back({origin[0] + spacing * static_cast<double>(i),
                   origin[1] + spacing * static_cast<double>(j)});
    }
  }
  return SiteSet(std::move(c));
}

SiteSet SiteSet::uniform(std::size_t n, double x_min, double x_max, double y_min, double y_max,
                         Rng& rng) {
  std::uniform_real_distribution<double> ux(x_min, x_max);
  std::uniform_real_distribution<double> uy(y_min, y_max);
  std::vector<Site> c(n);
  for (auto& s : c) {
    s[0] = ux(rng);
    s[1] = uy(rng);
  }
  return SiteSet(std::move(c));
}

double SiteSet::distance(std::size_t i, std::size_t j) const {
  return std::hypot(coords_[i][0] - coords_[j][0], coords_[i][1] - coords_[j][1]);
}

MatrixXd SiteSet::distance_matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = distance(i, j);
  }
  return d;
}

SiteSet SiteSet::subset(const std::vector<std::size_t>& idx) const {
  std::vector<Site> c;
  c.reserve(idx.size());
  for (auto i : idx) c.push_back(coords_.at(i));
  return SiteSet(std::move(c));
}

bool SiteSet::has_duplicates() const {
  std::set<Site> seen(coords_.begin(), coords_.end());
  return seen.size() != coords_.size();
}

MatrixXd matern_cov_matrix(const SiteSet& sites, const MaternParams& p) {
  p.validate();
  const auto n = static_cast<Eigen::Index>(sites.size());
  MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, i) = p.sigma2;
    for (Eigen::Index j = i + 1; j < n; ++j) c(i, j) = c(j, i) = matern_cov(sites.distance(i, j), p);
  }
  return c;
}

MatrixXd sample_field(const SiteSet& sites, const MaternParams& p, Eigen::Index n_reps, Rng& rng,
                      const FieldOptions& opts) {
  if (sites.size() == 0) throw DimensionError("sample_field: empty site set");
  MatrixXd cov = matern_cov_matrix(sites, p);
  if (sites.has_duplicates()) {
    if (!opts.jitter_duplicates) {
      throw NotSpdError("sample_field: duplicate sites make the covariance singular");
    }
    cov.diagonal().array() += opts.jitter_rel * p.sigma2;
  }
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NotSpdError("sample_field: Matérn covariance is not positive definite");
  }
  MatrixXd z(cov.rows(), n_reps);
  fill_standard_normal(z, rng);
  return (llt.matrixL() * z).transpose();
}

MatrixXd add_nugget(MatrixXd draws, double tau, Rng& rng) {
  if (!(tau > 0.0)) throw NumericDomainError("add_nugget: tau must be positive");
  std::normal_distribution<double> norm(0.0, 1.0 / std::sqrt(tau));
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    for (Eigen::Index i = 0; i < draws.rows(); ++i) draws(i, j) += norm(rng);
  }
  return draws;
}

MatrixXd constrain_subtraction(MatrixXd draws, std::size_t s0) {
  const auto col = static_cast<Eigen::Index>(s0);
  if (col >= draws.cols()) throw DimensionError("constrain_subtraction: bad site index");
  const VectorXd base = draws.col(col);
  draws.colwise() -= base;
  draws.col(col).setZero();
  return draws;
}

double subtraction_corr(double d1, double d2, double d12, const CorrFn& r) {
  if (d1 < 0.0 || d2 < 0.0 || d12 < 0.0) {
    throw NumericDomainError("subtraction_corr: negative distance");
  }
  const double r1 = r(d1);
  const double r2 = r(d2);
  const double r12 = r(d12);
  const double v1 = 1.0 - r1;
  const double v2 = 1.0 - r2;
  if (v1 < tol::subtraction_corr_guard || v2 < tol::subtraction_corr_guard) {
    throw NumericDomainError("subtraction_corr: site coincides with the conditioning site");
  }
  return (1.0 + r12 - r1 - r2) / (2.0 * std::sqrt(v1 * v2));
}

double subtraction_corr(double d1, double d2, double d12, const MaternParams& p) {
  p.validate();
  return subtraction_corr(d1, d2, d12, [&p](double d) { return matern_corr(d, p.rho, p.nu); });
}

MatrixXd constrain_by_b_modulation(MatrixXd draws, const VectorXd& b) {
  if (b.size() != draws.cols()) {
    throw DimensionError("constrain_by_b_modulation: one b value per site required");
  }
  if ((b.array() < 0.0).any() || !b.allFinite()) {
    throw NumericDomainError("constrain_by_b_modulation: b values must be finite and >= 0");
  }
  for (Eigen::Index j = 0; j < draws.cols(); ++j) draws.col(j) *= b(j);
  return draws;
}

ConditionedField constrain_conditioning(const SpdMatrix& cov, std::size_t s0) {
  const auto k = static_cast<Eigen::Index>(s0);
  if (k >= cov.dim()) throw DimensionError("constrain_conditioning: bad site index");
  const MatrixXd& s = cov.matrix();
  ConditionedField out;
  out.weights = s.col(k) / s(k, k);
  out.cov = s - out.weights * s.row(k);
  out.cov.row(k).setZero();
  out.cov.col(k).setZero();
  out.cov = symmetrize(out.cov);
  out.mean = VectorXd::Zero(cov.dim());
  return out;
}

}  // namespace postadj
