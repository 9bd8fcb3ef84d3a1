#ifndef POSTADJ_CONDEX_MODEL_HPP
#define POSTADJ_CONDEX_MODEL_HPP

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "postadj/params.hpp"
#include "postadj/random_fields.hpp"

namespace postadj::condex {

/// Parameters of a(d) = y0 exp(-(d / lambda)^kappa), b(d) = sigma_b sqrt(1 - exp(-2 d / rho_b)),
/// a unit-variance Matérn(rho_z, nu_z) residual field and nugget precision tau.
struct Params {
  double lambda = 19.1;
  double kappa = 0.6;
  double sigma_b = 1.9;
  double rho_b = 4.6;
  double rho_z = 13.0;
  double tau = 23.1;
  double nu_z = 1.5;

  void validate() const;
  /// (lambda, kappa, sigma, rho_b, rho, tau)
  Eigen::VectorXd to_vector() const;
  static Params from_vector(const Eigen::VectorXd& v, double nu_z = 1.5);
};

double a_fn(double d, double y0, const Params& p);
double b_fn(double d, const Params& p);

/// Standard Laplace quantile, e.g. laplace_quantile(0.9975) = log(200).
double laplace_quantile(double prob);
double laplace_cdf(double y);

/// All six parameters, log-linked: lambda, kappa, sigma, rho_b, rho, tau.
ParamLayout full_layout();

/// Maps a natural-scale parameter vector to Params. With a fixed rho_b the
/// vector holds (lambda, kappa, sigma, rho, tau).
class ParamMap {
 public:
  ParamMap() = default;
  static ParamMap free_rho_b(double nu_z = 1.5);
  static ParamMap fixed_rho_b(double rho_b, double nu_z = 1.5);

  const ParamLayout& layout() const { return layout_; }
  bool rho_b_fixed() const { return fixed_; }
  double rho_b_value() const { return rho_b_; }
  Params operator()(const Eigen::VectorXd& theta) const;
  /// Inverse map (drops rho_b when fixed).
  Eigen::VectorXd to_theta(const Params& p) const;

 private:
  ParamLayout layout_;
  bool fixed_ = false;
  double rho_b_ = 0.0;
  double nu_z_ = 1.5;
};

/// Sites, threshold and conditioning sites. `used[k]` lists the sites (other
/// than the conditioning site itself) entering the likelihood for conditioning
/// site `conditioning[k]`.
struct Design {
  SiteSet sites;
  double threshold = 0.0;
  std::vector<std::size_t> conditioning;
  std::vector<std::vector<std::size_t>> used;
};

/// Uses every site within `radius` of each conditioning site (s0 excluded).
/// A non-positive radius selects every other site.
Design make_design(SiteSet sites, double threshold, std::vector<std::size_t> conditioning,
                   double radius);

/// Sites of an nx x ny grid whose indices are multiples of `stride` along both axes,
/// offset by `offset`.
std::vector<std::size_t> grid_subset(std::size_t nx, std::size_t ny, std::size_t stride,
                                     std::size_t offset = 0);

}  // namespace postadj::condex

#endif  // POSTADJ_CONDEX_MODEL_HPP
