#include "postadj/condex/pit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "postadj/errors.hpp"

namespace postadj::condex {

Eigen::MatrixXd laplace_pit(const Eigen::MatrixXd& values, const SiteSet& sites, const PitOptions& opts) {
  if (values.cols() != static_cast<Eigen::Index>(sites.size())) {
    throw DimensionError("laplace_pit: one column per site required");
  }
  if (!(opts.radius >= 0.0)) throw ConfigError("laplace_pit: radius must be non-negative");
  Eigen::MatrixXd out(values.rows(), values.cols());
  for (std::size_t s = 0; s < sites.size(); ++s) {
    std::vector<double> pool;
    for (std::size_t k = 0; k < sites.size(); ++k) {
      if (sites.distance(s, k) > opts.radius) continue;
      for (Eigen::Index j = 0; j < values.rows(); ++j) {
        const double v = values(j, static_cast<Eigen::Index>(k));
        if (!std::isnan(v)) pool.push_back(v);
      }
    }
    if (pool.size() < opts.min_count) {
      throw ConfigError("laplace_pit: site " + std::to_string(s) + " pools only " + std::to_string(pool.size()) +
                        " observations");
    }
    std::sort(pool.begin(), pool.end());
    const double denom = static_cast<double>(pool.size()) + 1.0;
    for (Eigen::Index j = 0; j < values.rows(); ++j) {
      const double v = values(j, static_cast<Eigen::Index>(s));
      if (std::isnan(v)) {
        out(j, static_cast<Eigen::Index>(s)) = v;
        continue;
      }
      const auto rank = static_cast<double>(std::upper_bound(pool.begin(), pool.end(), v) - pool.begin());
      const double f = rank / denom;
      out(j, static_cast<Eigen::Index>(s)) = f < 0.5 ? std::log(2.0 * f) : -std::log(2.0 * (1.0 - f));
    }
  }
  return out;
}

Panel laplace_pit(const Panel& panel, const PitOptions& opts) {
  Panel out = panel;
  out.values = laplace_pit(panel.values, panel.sites, opts);
  return out;
}

}  // namespace postadj::condex
