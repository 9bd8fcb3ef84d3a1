#include "postadj/priors.hpp"

#include <cmath>
#include <limits>

#include "postadj/errors.hpp"

namespace postadj {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;

double normal_logpdf(double x, double m, double s) {
  const double z = (x - m) / s;
  return -kLogSqrt2Pi - std::log(s) - 0.5 * z * z;
}

}  // namespace

Prior Prior::gaussian_on_link(std::string param, double mean, double sd) {
  Prior p;
  p.kind = PriorKind::gaussian_on_link;
  p.param = std::move(param);
  p.a = mean;
  p.b = sd;
  return p;
}

Prior Prior::gamma(std::string param, double shape, double scale) {
  Prior p;
  p.kind = PriorKind::gamma;
  p.param = std::move(param);
  p.a = shape;
  p.b = scale;
  return p;
}

Prior Prior::pc_range_sd(std::string range, double range0, double p_below, std::string sd,
                         double sd0, double p_above) {
  Prior p;
  p.kind = PriorKind::pc_range_sd;
  p.param = std::move(range);
  p.param2 = std::move(sd);
  p.a = range0;
  p.alpha_a = p_below;
  p.b = sd0;
  p.alpha_b = p_above;
  return p;
}

double gamma_logpdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return (shape - 1.0) * std::log(x) - x / scale - shape * std::log(scale) - std::lgamma(shape);
}

double pc_range_sd_logpdf(double rho, double sigma, double range0, double p_below, double sd0,
                          double p_above) {
  if (!(rho > 0.0) || !(sigma > 0.0)) return -std::numeric_limits<double>::infinity();
  const double lr = -std::log(p_below) * range0;
  const double ls = -std::log(p_above) / sd0;
  return std::log(lr) - 2.0 * std::log(rho) - lr / rho + std::log(ls) - ls * sigma;
}

PriorSet::PriorSet(const ParamLayout& layout, std::vector<Prior> priors)
    : layout_(layout), priors_(std::move(priors)) {
  for (const auto& p : priors_) {
    idx_.push_back(layout_.index_of(p.param));
    switch (p.kind) {
      case PriorKind::gaussian_on_link:
        if (!(p.b > 0.0)) throw ConfigError("gaussian prior: sd must be positive");
        idx2_.push_back(-1);
        break;
      case PriorKind::gamma:
        if (!(p.a > 0.0) || !(p.b > 0.0)) throw ConfigError("gamma prior: shape and scale must be positive");
        if (layout_.links()[static_cast<std::size_t>(idx_.back())] != Link::log) {
          throw ConfigError("gamma prior: parameter must be log-linked");
        }
        idx2_.push_back(-1);
        break;
      case PriorKind::pc_range_sd:
        if (!(p.a > 0.0) || !(p.b > 0.0) || !(p.alpha_a > 0.0 && p.alpha_a < 1.0) ||
            !(p.alpha_b > 0.0 && p.alpha_b < 1.0)) {
          throw ConfigError("PC prior: bounds must be positive and probabilities in (0, 1)");
        }
        idx2_.push_back(layout_.index_of(p.param2));
        if (layout_.links()[static_cast<std::size_t>(idx_.back())] != Link::log ||
            layout_.links()[static_cast<std::size_t>(idx2_.back())] != Link::log) {
          throw ConfigError("PC prior: range and sd must be log-linked");
        }
        break;
    }
  }
}

double PriorSet::log_density(const Eigen::VectorXd& natural) const {
  double total = 0.0;
  for (std::size_t k = 0; k < priors_.size(); ++k) {
    const Prior& p = priors_[k];
    const double x = natural(idx_[k]);
    switch (p.kind) {
      case PriorKind::gaussian_on_link: {
        const Link link = layout_.links()[static_cast<std::size_t>(idx_[k])];
        if (link == Link::log && !(x > 0.0)) return -std::numeric_limits<double>::infinity();
        total += normal_logpdf(to_unconstrained(link, x), p.a, p.b);
        if (link == Link::log) total -= std::log(x);
        break;
      }
      case PriorKind::gamma:
        total += gamma_logpdf(x, p.a, p.b);
        break;
      case PriorKind::pc_range_sd:
        total += pc_range_sd_logpdf(x, natural(idx2_[k]), p.a, p.alpha_a, p.b, p.alpha_b);
        break;
    }
  }
  return total;
}

double PriorSet::log_density_unconstrained(const Eigen::VectorXd& u) const {
  double total = 0.0;
  for (std::size_t k = 0; k < priors_.size(); ++k) {
    const Prior& p = priors_[k];
    const double uk = u(idx_[k]);
    switch (p.kind) {
      case PriorKind::gaussian_on_link:
        total += normal_logpdf(uk, p.a, p.b);
        break;
      case PriorKind::gamma:
        total += gamma_logpdf(std::exp(uk), p.a, p.b) + uk;
        break;
      case PriorKind::pc_range_sd: {
        const double u2 = u(idx2_[k]);
        total += pc_range_sd_logpdf(std::exp(uk), std::exp(u2), p.a, p.alpha_a, p.b, p.alpha_b) +
                 uk + u2;
        break;
      }
    }
  }
  return total;
}

}  // namespace postadj
