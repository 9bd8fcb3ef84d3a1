#include "postadj/likelihoods.hpp"

#include <cmath>
#include <string>

#include "postadj/errors.hpp"

namespace postadj {

double TermGroup::weighted_total(const VectorXd& theta) const {
  const VectorXd v = evaluate(theta);
  const auto& k = keys();
  double total = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i].weight != 0.0) total += k[i].weight * v(static_cast<Eigen::Index>(i));
  }
  return total;
}

FunctionTermGroup::FunctionTermGroup(std::vector<CompositeTerm> terms) : terms_(std::move(terms)) {
  keys_.reserve(terms_.size());
  for (const auto& t : terms_) {
    if (!(t.key.weight >= 0.0) || !std::isfinite(t.key.weight)) {
      throw ConfigError("CompositeTerm: weight must be finite and non-negative");
    }
    if (!t.eval) throw ConfigError("CompositeTerm: missing evaluator");
    keys_.push_back(t.key);
  }
}

VectorXd FunctionTermGroup::evaluate(const VectorXd& theta) const {
  VectorXd out(static_cast<Eigen::Index>(terms_.size()));
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = terms_[i].eval(theta);
  }
  return out;
}

CompositeLikelihood::CompositeLikelihood(ParamLayout layout,
                                         std::vector<std::shared_ptr<const TermGroup>> groups,
                                         NeighborStructure neighbors)
    : layout_(std::move(layout)), groups_(std::move(groups)), neighbors_(neighbors) {
  for (const auto& g : groups_) {
    if (!g) throw ConfigError("CompositeLikelihood: null term group");
    for (const auto& k : g->keys()) {
      if (!(k.weight >= 0.0) || !std::isfinite(k.weight)) {
        throw ConfigError("CompositeLikelihood: weights must be finite and non-negative");
      }
      keys_.push_back(k);
    }
  }
  if (keys_.empty()) throw ConfigError("CompositeLikelihood: no terms");
}

VectorXd CompositeLikelihood::term_values(const VectorXd& theta) const {
  VectorXd out(static_cast<Eigen::Index>(keys_.size()));
  Eigen::Index pos = 0;
  for (const auto& g : groups_) {
    const VectorXd v = g->evaluate(theta);
    out.segment(pos, v.size()) = v;
    pos += v.size();
  }
  return out;
}

double CompositeLikelihood::value(const VectorXd& theta) const {
  double total = 0.0;
  for (const auto& g : groups_) total += g->weighted_total(theta);
  if (!std::isfinite(total)) report_non_finite(theta);
  return total;
}

void CompositeLikelihood::report_non_finite(const VectorXd& theta) const {
  VectorXd v;
  try {
    v = term_values(theta);
  } catch (const EvaluationError&) {
    throw;
  } catch (const Error& e) {
    throw EvaluationError(std::string("composite likelihood: term evaluation failed: ") + e.what());
  }
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const double x = v(static_cast<Eigen::Index>(i));
    if (keys_[i].weight != 0.0 && !std::isfinite(x)) {
      throw EvaluationError("composite likelihood: non-finite term (unit " +
                                std::to_string(keys_[i].unit) + ", time " +
                                std::to_string(keys_[i].time) + ")",
                            keys_[i].unit, keys_[i].time);
    }
  }
  throw EvaluationError("composite likelihood: non-finite total");
}

double eval_composite(const CompositeLikelihood& cl, const ParamVector& theta) {
  if (theta.size() != cl.layout().size()) {
    throw DimensionError("eval_composite: parameter dimension mismatch");
  }
  return cl.value(theta.values());
}

std::function<double(const VectorXd&)> unconstrained_objective(const CompositeLikelihood& cl) {
  return [&cl](const VectorXd& u) { return cl.value(cl.layout().natural(u)); };
}

}  // namespace postadj
