#ifndef POSTADJ_CONDEX_PIT_HPP
#define POSTADJ_CONDEX_PIT_HPP

#include <cstddef>

#include <Eigen/Dense>

#include "postadj/condex/panel_io.hpp"

namespace postadj::condex {

struct PitOptions {
  double radius = 5.0;        // pool sites within this distance (km)
  std::size_t min_count = 20;  // minimum pooled observations per site
};

/// Transforms each column to standard Laplace margins. The distribution at site
/// s is the empirical CDF of all observations at sites within `radius` of s,
/// F(x) = #{pooled <= x} / (N + 1). Then Y = log(2F) for F < 1/2 and
/// Y = -log(2(1 - F)) otherwise. NaN entries stay NaN and are not pooled.
Eigen::MatrixXd laplace_pit(const Eigen::MatrixXd& values, const SiteSet& sites, const PitOptions& opts = {});
Panel laplace_pit(const Panel& panel, const PitOptions& opts = {});

}  // namespace postadj::condex

#endif  // POSTADJ_CONDEX_PIT_HPP
