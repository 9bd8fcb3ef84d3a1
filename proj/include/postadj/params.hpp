#ifndef POSTADJ_PARAMS_HPP
#define POSTADJ_PARAMS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace postadj {

enum class Link { identity, log };

double to_unconstrained(Link link, double natural);
double to_natural(Link link, double unconstrained);

/// Names and links of an ordered parameter vector. Samplers, optimizers and
/// numeric derivatives work on the unconstrained (link) scale; likelihoods
/// receive natural-scale values.
class ParamLayout {
 public:
  ParamLayout() = default;
  ParamLayout(std::vector<std::string> names, std::vector<Link> links);

  Eigen::Index size() const { return static_cast<Eigen::Index>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Link>& links() const { return links_; }
  Eigen::Index index_of(const std::string& name) const;

  Eigen::VectorXd unconstrained(const Eigen::VectorXd& natural) const;
  Eigen::VectorXd natural(const Eigen::VectorXd& unconstrained) const;

  /// log |d natural / d unconstrained|, summed over components.
  double log_jacobian(const Eigen::VectorXd& unconstrained) const;

  /// Throws NumericDomainError when values are non-finite or a log-linked
  /// component is not strictly positive.
  void validate_natural(const Eigen::VectorXd& natural) const;

 private:
  std::vector<std::string> names_;
  std::vector<Link> links_;
};

class ParamVector {
 public:
  ParamVector(ParamLayout layout, Eigen::VectorXd values);

  static ParamVector from_unconstrained(ParamLayout layout, const Eigen::VectorXd& u);

  const ParamLayout& layout() const { return layout_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd unconstrained() const { return layout_.unconstrained(values_); }
  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_(i); }
  double value(const std::string& name) const { return values_(layout_.index_of(name)); }

 private:
  ParamLayout layout_;
  Eigen::VectorXd values_;
};

}  // namespace postadj

#endif  // POSTADJ_PARAMS_HPP
