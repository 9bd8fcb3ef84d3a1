#include "postadj/grid_gmrf.hpp"

#include <cmath>
#include <numbers>

#include "postadj/errors.hpp"

namespace postadj {

GridGmrf::GridGmrf(const GridGmrfSpec& spec) : spec_(spec) {
  if (!(spec.spacing > 0.0) || spec.x_max <= spec.x_min || spec.y_max <= spec.y_min ||
      spec.extension_cells < 0) {
    throw ConfigError("GridGmrf: invalid grid specification");
  }
  const double h = spec.spacing;
  const auto cells_x = static_cast<Eigen::Index>(std::ceil((spec.x_max - spec.x_min) / h - 1e-9));
  const auto cells_y = static_cast<Eigen::Index>(std::ceil((spec.y_max - spec.y_min) / h - 1e-9));
  nx_ = cells_x + 1 + 2 * spec.extension_cells;
  ny_ = cells_y + 1 + 2 * spec.extension_cells;
  x0_ = spec.x_min - spec.extension_cells * h;
  y0_ = spec.y_min - spec.extension_cells * h;

  const Eigen::Index m = num_nodes();
  stiffness_ = MatrixXd::Zero(m, m);
  auto id = [this](Eigen::Index i, Eigen::Index j) { return j * nx_ + i; };
  for (Eigen::Index j = 0; j < ny_; ++j) {
    for (Eigen::Index i = 0; i < nx_; ++i) {
      const Eigen::Index a = id(i, j);
      if (i + 1 < nx_) {
        const Eigen::Index b = id(i + 1, j);
        stiffness_(a, b) = stiffness_(b, a) = -1.0;
        stiffness_(a, a) += 1.0;
        stiffness_(b, b) += 1.0;
      }
      if (j + 1 < ny_) {
        const Eigen::Index b = id(i, j + 1);
        stiffness_(a, b) = stiffness_(b, a) = -1.0;
        stiffness_(a, a) += 1.0;
        stiffness_(b, b) += 1.0;
      }
    }
  }
  stiffness_sq_ = stiffness_ * stiffness_;
}

Site GridGmrf::node(Eigen::Index i) const {
  return {x0_ + spec_.spacing * static_cast<double>(i % nx_),
          y0_ + spec_.spacing * static_cast<double>(i / nx_)};
}

MatrixXd GridGmrf::precision(const MaternParams& p) const {
  p.validate();
  if (p.nu != 1.0) throw ConfigError("GridGmrf: the grid precision is defined for nu = 1 only");
  const double kappa = p.kappa();
  const double h2 = spec_.spacing * spec_.spacing;
  const double tau0_sq = 1.0 / (4.0 * std::numbers::pi * kappa * kappa * p.sigma2);
  const double k2 = kappa * kappa;
  MatrixXd q = (2.0 * k2) * stiffness_ + stiffness_sq_ / h2;
  q.diagonal().array() += k2 * k2 * h2;
  return tau0_sq * q;
}

MatrixXd GridGmrf::projection(const SiteSet& sites) const {
  const double h = spec_.spacing;
  MatrixXd a = MatrixXd::Zero(static_cast<Eigen::Index>(sites.size()), num_nodes());
  for (std::size_t s = 0; s < sites.size(); ++s) {
    const double fx = (sites[s][0] - x0_) / h;
    const double fy = (sites[s][1] - y0_) / h;
    auto ix = static_cast<Eigen::Index>(std::floor(fx));
    auto iy = static_cast<Eigen::Index>(std::floor(fy));
    if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) {
      throw ConfigError("GridGmrf: site outside the grid");
    }
    ix = std::min(ix, nx_ - 2);
    iy = std::min(iy, ny_ - 2);
    const double wx = fx - static_cast<double>(ix);
    const double wy = fy - static_cast<double>(iy);
    const auto row = static_cast<Eigen::Index>(s);
    a(row, iy * nx_ + ix) += (1.0 - wx) * (1.0 - wy);
    a(row, iy * nx_ + ix + 1) += wx * (1.0 - wy);
    a(row, (iy + 1) * nx_ + ix) += (1.0 - wx) * wy;
    a(row, (iy + 1) * nx_ + ix + 1) += wx * wy;
  }
  return a;
}

bool GridGmrf::extension_covers(double rho) const {
  return spec_.extension_cells * spec_.spacing >= 2.0 * rho;
}

}  // namespace postadj
