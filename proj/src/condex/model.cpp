#include "postadj/condex/model.hpp"

#include <cmath>

#include "postadj/errors.hpp"

namespace postadj::condex {

void Params::validate() const {
  for (double v : {lambda, kappa, sigma_b, rho_b, rho_z, tau, nu_z}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw NumericDomainError("condex::Params: all parameters must be positive and finite");
    }
  }
}

Eigen::VectorXd Params::to_vector() const {
  Eigen::VectorXd v(6);
  v << lambda, kappa, sigma_b, rho_b, rho_z, tau;
  return v;
}

Params Params::from_vector(const Eigen::VectorXd& v, double nu_z) {
  if (v.size() != 6) throw DimensionError("condex::Params: expected six values");
  return Params{v(0), v(1), v(2), v(3), v(4), v(5), nu_z};
}

double a_fn(double d, double y0, const Params& p) {
  if (d < 0.0) throw NumericDomainError("a_fn: negative distance");
  return y0 * std::exp(-std::pow(d / p.lambda, p.kappa));
}

double b_fn(double d, const Params& p) {
  if (d < 0.0) throw NumericDomainError("b_fn: negative distance");
  return p.sigma_b * std::sqrt(-std::expm1(-2.0 * d / p.rho_b));
}

double laplace_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw NumericDomainError("laplace_quantile: prob must be in (0, 1)");
  return prob < 0.5 ? std::log(2.0 * prob) : -std::log(2.0 * (1.0 - prob));
}

double laplace_cdf(double y) {
  return y < 0.0 ? 0.5 * std::exp(y) : 1.0 - 0.5 * std::exp(-y);
}

ParamLayout full_layout() {
  return ParamLayout({"lambda", "kappa", "sigma", "rho_b", "rho", "tau"},
                     std::vector<Link>(6, Link::log));
}

ParamMap ParamMap::free_rho_b(double nu_z) {
  ParamMap m;
  m.layout_ = full_layout();
  m.nu_z_ = nu_z;
  return m;
}

ParamMap ParamMap::fixed_rho_b(double rho_b, double nu_z) {
  if (!(rho_b > 0.0)) throw NumericDomainError("ParamMap: fixed rho_b must be positive");
  ParamMap m;
  m.layout_ = ParamLayout({"lambda", "kappa", "sigma", "rho", "tau"}, std::vector<Link>(5, Link::log));
  m.fixed_ = true;
  m.rho_b_ = rho_b;
  m.nu_z_ = nu_z;
  return m;
}

Params ParamMap::operator()(const Eigen::VectorXd& t) const {
  if (t.size() != layout_.size()) throw DimensionError("ParamMap: wrong parameter count");
  if (fixed_) return Params{t(0), t(1), t(2), rho_b_, t(3), t(4), nu_z_};
  return Params{t(0), t(1), t(2), t(3), t(4), t(5), nu_z_};
}

Eigen::VectorXd ParamMap::to_theta(const Params& p) const {
  if (!fixed_) return p.to_vector();
  Eigen::VectorXd v(5);
  v << p.lambda, p.kappa, p.sigma_b, p.rho_z, p.tau;
  return v;
}

Design make_design(SiteSet sites, double threshold, std::vector<std::size_t> conditioning,
                   double radius) {
  Design d;
  d.threshold = threshold;
  for (auto s0 : conditioning) {
    if (s0 >= sites.size()) throw DimensionError("make_design: conditioning site out of range");
    std::vector<std::size_t> u;
    for (std::size_t s = 0; s < sites.size(); ++s) {
      if (s == s0) continue;
      if (radius <= 0.0 || sites.distance(s, s0) <= radius) u.push_back(s);
    }
    if (u.empty()) throw ConfigError("make_design: no sites within the selection radius");
    d.used.push_back(std::move(u));
  }
  d.sites = std::move(sites);
  d.conditioning = std::move(conditioning);
  return d;
}

std::vector<std::size_t> grid_subset(std::size_t nx, std::size_t ny, std::size_t stride,
                                     std::size_t offset) {
  if (stride == 0) throw ConfigError("grid_subset: stride must be positive");
  std::vector<std::size_t> out;
  for (std::size_t j = offset; j < ny; j += stride) {
    for (std::size_t i = offset; i < nx; i += stride) out.push_back(j * nx + i);
  }
  return out;
}

}  // namespace postadj::condex
