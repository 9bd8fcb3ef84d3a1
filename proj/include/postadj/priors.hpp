#ifndef POSTADJ_PRIORS_HPP
#define POSTADJ_PRIORS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "postadj/params.hpp"

namespace postadj {

enum class PriorKind { gaussian_on_link, gamma, pc_range_sd };

/// One prior component.
///  - gaussian_on_link: N(a, b^2) on the unconstrained value of `param`.
///  - gamma: shape a, scale b on the natural value of `param`.
///  - pc_range_sd: joint PC prior for a 2-D Matérn field with P(range < a) = alpha_a
///    and P(sd > b) = alpha_b; `param` is the range, `param2` the standard deviation.
struct Prior {
  PriorKind kind = PriorKind::gaussian_on_link;
  std::string param;
  std::string param2;
  double a = 0.0;
  double b = 1.0;
  double alpha_a = 0.5;
  double alpha_b = 0.5;

  static Prior gaussian_on_link(std::string param, double mean, double sd);
  static Prior gamma(std::string param, double shape, double scale);
  static Prior pc_range_sd(std::string range, double range0, double p_below, std::string sd,
                           double sd0, double p_above);
};

double gamma_logpdf(double x, double shape, double scale);

/// Joint log density of the 2-D PC prior:
/// lr rho^-2 exp(-lr / rho) * ls exp(-ls sigma), lr = -log(p_below) range0,
/// ls = -log(p_above) / sd0.
double pc_range_sd_logpdf(double rho, double sigma, double range0, double p_below, double sd0,
                          double p_above);

/// Independent prior components over a parameter layout. Parameters with no
/// component get a flat density on the unconstrained scale.
class PriorSet {
 public:
  PriorSet() = default;
  PriorSet(const ParamLayout& layout, std::vector<Prior> priors);

  const std::vector<Prior>& priors() const { return priors_; }
  bool empty() const { return priors_.empty(); }

  /// Log density of the natural-scale parameters.
  double log_density(const Eigen::VectorXd& natural) const;

  /// Log density of the unconstrained parameters (includes link Jacobians).
  double log_density_unconstrained(const Eigen::VectorXd& u) const;

 private:
  ParamLayout layout_;
  std::vector<Prior> priors_;
  std::vector<Eigen::Index> idx_;
  std::vector<Eigen::Index> idx2_;
};

}  // namespace postadj

#endif  // POSTADJ_PRIORS_HPP
