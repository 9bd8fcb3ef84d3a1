#ifndef POSTADJ_LIKELIHOODS_HPP
#define POSTADJ_LIKELIHOODS_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "postadj/params.hpp"

namespace postadj {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Identifies one component l^(i)(theta; y_j): unit i, time index j, weight w_ij.
struct TermKey {
  std::size_t unit = 0;
  std::size_t time = 0;
  double weight = 1.0;
};

/// A batch of composite terms sharing one evaluation routine. Evaluators take
/// natural-scale parameters and must be safe to call concurrently.
class TermGroup {
 public:
  virtual ~TermGroup() = default;

  virtual const std::vector<TermKey>& keys() const = 0;

  /// Unweighted term values, one per key.
  virtual VectorXd evaluate(const VectorXd& theta) const = 0;

  /// sum_k w_k l_k(theta). Terms with zero weight are skipped. Groups with a
  /// cheaper route to the total may override; the result must agree with the
  /// weighted sum of evaluate().
  virtual double weighted_total(const VectorXd& theta) const;
};

/// A single term with its own evaluator.
struct CompositeTerm {
  TermKey key;
  std::function<double(const VectorXd&)> eval;
};

class FunctionTermGroup : public TermGroup {
 public:
  explicit FunctionTermGroup(std::vector<CompositeTerm> terms);

  const std::vector<TermKey>& keys() const override { return keys_; }
  VectorXd evaluate(const VectorXd& theta) const override;

 private:
  std::vector<CompositeTerm> terms_;
  std::vector<TermKey> keys_;
};

/// Terms (i, j) and (i', j') are neighbours iff |j - j'| <= window.
struct NeighborStructure {
  std::size_t window = 0;
};

class CompositeLikelihood {
 public:
  CompositeLikelihood(ParamLayout layout, std::vector<std::shared_ptr<const TermGroup>> groups,
                      NeighborStructure neighbors = {});

  const ParamLayout& layout() const { return layout_; }
  const NeighborStructure& neighbors() const { return neighbors_; }
  void set_neighbors(NeighborStructure nb) { neighbors_ = nb; }
  std::size_t num_terms() const { return keys_.size(); }
  const std::vector<TermKey>& keys() const { return keys_; }
  const std::vector<std::shared_ptr<const TermGroup>>& groups() const { return groups_; }

  /// Unweighted per-term values in key order.
  VectorXd term_values(const VectorXd& theta) const;

  /// sum_j sum_i w_ij l^(i)(theta; y_j). A non-finite result throws
  /// EvaluationError naming the first offending (unit, time).
  double value(const VectorXd& theta) const;

 private:
  [[noreturn]] void report_non_finite(const VectorXd& theta) const;

  ParamLayout layout_;
  std::vector<std::shared_ptr<const TermGroup>> groups_;
  std::vector<TermKey> keys_;
  NeighborStructure neighbors_;
};

double eval_composite(const CompositeLikelihood& cl, const ParamVector& theta);

/// Objective on the unconstrained scale: u -> cl.value(natural(u)).
std::function<double(const VectorXd&)> unconstrained_objective(const CompositeLikelihood& cl);

}  // namespace postadj

#endif  // POSTADJ_LIKELIHOODS_HPP
