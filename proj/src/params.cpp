#include "postadj/params.hpp"

#include <cmath>

#include "postadj/errors.hpp"

namespace postadj {

double to_unconstrained(Link link, double natural) {
  return link == Link::log ? std::log(natural) : natural;
}

double to_natural(Link link, double unconstrained) {
  return link == Link::log ? std::exp(unconstrained) : unconstrained;
}

ParamLayout::ParamLayout(std::vector<std::string> names, std::vector<Link> links)
    : names_(std::move(names)), links_(std::move(links)) {
  if (names_.size() != links_.size()) {
    throw DimensionError("ParamLayout: names and links differ in length");
  }
}

Eigen::Index ParamLayout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<Eigen::Index>(i);
  }
  throw ConfigError("ParamLayout: unknown parameter '" + name + "'");
}

Eigen::VectorXd ParamLayout::unconstrained(const Eigen::VectorXd& natural) const {
  if (natural.size() != size()) throw DimensionError("ParamLayout: size mismatch");
  Eigen::VectorXd u(natural.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = to_unconstrained(links_[i], natural(i));
  return u;
}

Eigen::VectorXd ParamLayout::natural(const Eigen::VectorXd& unconstrained) const {
  if (unconstrained.size() != size()) throw DimensionError("ParamLayout: size mismatch");
  Eigen::VectorXd x(unconstrained.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = to_natural(links_[i], unconstrained(i));
  return x;
}

double ParamLayout::log_jacobian(const Eigen::VectorXd& unconstrained) const {
  double out = 0.0;
  for (Eigen::Index i = 0; i < unconstrained.size(); ++i) {
    if (links_[i] == Link::log) out += unconstrained(i);
  }
  return out;
}

void ParamLayout::validate_natural(const Eigen::VectorXd& natural) const {
  if (natural.size() != size()) throw DimensionError("ParamLayout: size mismatch");
  for (Eigen::Index i = 0; i < natural.size(); ++i) {
    if (!std::isfinite(natural(i))) {
      throw NumericDomainError("parameter '" + names_[i] + "' is not finite");
    }
    if (links_[i] == Link::log && !(natural(i) > 0.0)) {
      throw NumericDomainError("parameter '" + names_[i] + "' must be positive");
    }
  }
}

ParamVector::ParamVector(ParamLayout layout, Eigen::VectorXd values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  layout_.validate_natural(values_);
}

ParamVector ParamVector::from_unconstrained(ParamLayout layout, const Eigen::VectorXd& u) {
  Eigen::VectorXd x = layout.natural(u);
  return ParamVector(std::move(layout), std::move(x));
}

}  // namespace postadj
