#include "postadj/condex/likelihood.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "postadj/errors.hpp"

namespace postadj::condex {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Geometry {
  Eigen::VectorXd d0;    // distance of each used site to s0
  Eigen::MatrixXd dist;  // pairwise distances among used sites
};

Geometry make_geometry(const SiteSet& sites, std::size_t s0, const std::vector<std::size_t>& used) {
  const auto m = static_cast<Eigen::Index>(used.size());
  Geometry g;
  g.d0.resize(m);
  g.dist.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    g.d0(i) = sites.distance(used[static_cast<std::size_t>(i)], s0);
    g.dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      g.dist(i, j) = g.dist(j, i) =
          sites.distance(used[static_cast<std::size_t>(i)], used[static_cast<std::size_t>(j)]);
    }
  }
  return g;
}

void mean_and_cov(const Params& p, const Geometry& g, Eigen::VectorXd& alpha, Eigen::MatrixXd& cov) {
  const Eigen::Index m = g.d0.size();
  alpha.resize(m);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    alpha(i) = a_fn(g.d0(i), 1.0, p);
    b(i) = b_fn(g.d0(i), p);
  }
  cov.resize(m, m);
  const double nugget = 1.0 / p.tau;
  for (Eigen::Index i = 0; i < m; ++i) {
    cov(i, i) = b(i) * b(i) + nugget;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      cov(i, j) = cov(j, i) = b(i) * b(j) * matern_corr(g.dist(i, j), p.rho_z, p.nu_z);
    }
  }
}

// Terms of one conditioning site.
class SiteGroup : public TermGroup {
 public:
  SiteGroup(const Design& design, std::size_t k, const Eigen::MatrixXd& data,
            const std::vector<std::size_t>& times, const ParamMap& map, bool moment_totals)
      : map_(map), moment_totals_(moment_totals) {
    const std::size_t s0 = design.conditioning[k];
    const auto& used = design.used[k];
    geom_ = make_geometry(design.sites, s0, used);
    const auto m = static_cast<Eigen::Index>(used.size());

    std::vector<Eigen::Index> complete_rows;
    for (Eigen::Index j = 0; j < data.rows(); ++j) {
      const double y0 = data(j, static_cast<Eigen::Index>(s0));
      if (!(std::isfinite(y0) && y0 > design.threshold)) continue;
      const std::size_t pos = keys_.size();
      keys_.push_back({s0, times.empty() ? static_cast<std::size_t>(j) : times[static_cast<std::size_t>(j)], 1.0});
      Eigen::VectorXd y(m);
      std::vector<Eigen::Index> avail;
      for (Eigen::Index i = 0; i < m; ++i) {
        y(i) = data(j, static_cast<Eigen::Index>(used[static_cast<std::size_t>(i)]));
        if (std::isfinite(y(i))) avail.push_back(i);
      }
      if (static_cast<Eigen::Index>(avail.size()) == m) {
        complete_rows.push_back(j);
        complete_pos_.push_back(pos);
        y0_complete_.push_back(y0);
        ycols_.push_back(std::move(y));
      } else {
        partial_.push_back({pos, y0, std::move(y), std::move(avail)});
      }
    }
    y_.resize(m, static_cast<Eigen::Index>(ycols_.size()));
    for (std::size_t c = 0; c < ycols_.size(); ++c) y_.col(static_cast<Eigen::Index>(c)) = ycols_[c];
    ycols_.clear();
    y0_ = Eigen::Map<const Eigen::VectorXd>(y0_complete_.data(), static_cast<Eigen::Index>(y0_complete_.size()));
    syy_ = y_ * y_.transpose();
    sy0y_ = y_ * y0_;
    s00_ = y0_.squaredNorm();
  }

  const std::vector<TermKey>& keys() const override { return keys_; }

  VectorXd evaluate(const VectorXd& theta) const override {
    VectorXd out(static_cast<Eigen::Index>(keys_.size()));
    const Params p = map_(theta);
    Eigen::VectorXd alpha;
    Eigen::MatrixXd cov;
    mean_and_cov(p, geom_, alpha, cov);
    if (!complete_pos_.empty()) {
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) return VectorXd::Constant(out.size(), kNaN);
      const double c = -0.5 * (static_cast<double>(cov.rows()) * kLog2Pi +
                               2.0 * llt.matrixLLT().diagonal().array().log().sum());
      const Eigen::MatrixXd w = llt.matrixL().solve(y_ - alpha * y0_.transpose());
      const Eigen::VectorXd q = w.colwise().squaredNorm().transpose();
      for (std::size_t t = 0; t < complete_pos_.size(); ++t) {
        out(static_cast<Eigen::Index>(complete_pos_[t])) = c - 0.5 * q(static_cast<Eigen::Index>(t));
      }
    }
    for (const auto& pt : partial_) out(static_cast<Eigen::Index>(pt.pos)) = partial_term(pt, alpha, cov);
    return out;
  }

  double weighted_total(const VectorXd& theta) const override {
    if (!moment_totals_) return TermGroup::weighted_total(theta);
    const Params p = map_(theta);
    Eigen::VectorXd alpha;
    Eigen::MatrixXd cov;
    mean_and_cov(p, geom_, alpha, cov);
    double total = 0.0;
    if (!complete_pos_.empty()) {
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) return kNaN;
      const double n = static_cast<double>(complete_pos_.size());
      const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      // sum_j (y_j - alpha y0_j)(y_j - alpha y0_j)^T from the stored moments.
      const Eigen::MatrixXd scatter = syy_ - alpha * sy0y_.transpose() - sy0y_ * alpha.transpose() +
                                      s00_ * alpha * alpha.transpose();
      const double quad = llt.solve(scatter).trace();
      total += -0.5 * (n * (static_cast<double>(cov.rows()) * kLog2Pi + logdet) + quad);
    }
    for (const auto& pt : partial_) total += partial_term(pt, alpha, cov);
    return total;
  }

 private:
  struct Partial {
    std::size_t pos;
    double y0;
    Eigen::VectorXd y;
    std::vector<Eigen::Index> avail;
  };

  static double partial_term(const Partial& pt, const Eigen::VectorXd& alpha, const Eigen::MatrixXd& cov) {
    const auto k = static_cast<Eigen::Index>(pt.avail.size());
    if (k == 0) return 0.0;
    Eigen::MatrixXd sub(k, k);
    Eigen::VectorXd r(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      r(i) = pt.y(pt.avail[static_cast<std::size_t>(i)]) - alpha(pt.avail[static_cast<std::size_t>(i)]) * pt.y0;
      for (Eigen::Index j = 0; j < k; ++j) {
        sub(i, j) = cov(pt.avail[static_cast<std::size_t>(i)], pt.avail[static_cast<std::size_t>(j)]);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success) return kNaN;
    const Eigen::VectorXd w = llt.matrixL().solve(r);
    return -0.5 * (static_cast<double>(k) * kLog2Pi +
                   2.0 * llt.matrixLLT().diagonal().array().log().sum() + w.squaredNorm());
  }

  ParamMap map_;
  bool moment_totals_;
  Geometry geom_;
  std::vector<TermKey> keys_;
  std::vector<std::size_t> complete_pos_;
  std::vector<double> y0_complete_;
  std::vector<Eigen::VectorXd> ycols_;
  Eigen::MatrixXd y_;  // used sites x complete terms
  Eigen::VectorXd y0_;
  Eigen::MatrixXd syy_;
  Eigen::VectorXd sy0y_;
  double s00_ = 0.0;
  std::vector<Partial> partial_;
};

}  // namespace

Eigen::MatrixXd conditional_cov(const Params& p, const SiteSet& sites, std::size_t s0,
                                const std::vector<std::size_t>& used) {
  p.validate();
  Eigen::VectorXd alpha;
  Eigen::MatrixXd cov;
  mean_and_cov(p, make_geometry(sites, s0, used), alpha, cov);
  return cov;
}

double condex_loglik(const Params& p, const SiteSet& sites, const Eigen::VectorXd& y,
                     std::size_t s0, const std::vector<std::size_t>& used) {
  p.validate();
  if (y.size() != static_cast<Eigen::Index>(sites.size())) {
    throw DimensionError("condex_loglik: one value per site required");
  }
  if (s0 >= sites.size()) throw DimensionError("condex_loglik: bad conditioning site");
  const double y0 = y(static_cast<Eigen::Index>(s0));
  if (!std::isfinite(y0)) throw NumericDomainError("condex_loglik: conditioning value not finite");
  const Geometry g = make_geometry(sites, s0, used);
  Eigen::VectorXd alpha;
  Eigen::MatrixXd cov;
  mean_and_cov(p, g, alpha, cov);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NotSpdError("condex_loglik: covariance not positive definite");
  Eigen::VectorXd r(static_cast<Eigen::Index>(used.size()));
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (used[i] == s0) throw ConfigError("condex_loglik: the conditioning site cannot be a used site");
    r(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(used[i])) - alpha(static_cast<Eigen::Index>(i)) * y0;
  }
  const Eigen::VectorXd w = llt.matrixL().solve(r);
  return -0.5 * (static_cast<double>(r.size()) * kLog2Pi +
                 2.0 * llt.matrixLLT().diagonal().array().log().sum() + w.squaredNorm());
}

double condex_loglik(const Params& p, const SiteSet& sites, const Eigen::VectorXd& y,
                     std::size_t s0) {
  std::vector<std::size_t> used;
  for (std::size_t s = 0; s < sites.size(); ++s) {
    if (s != s0) used.push_back(s);
  }
  return condex_loglik(p, sites, y, s0, used);
}

CompositeLikelihood condex_composite(const Design& design, const Eigen::MatrixXd& data,
                                     const ParamMap& map, const std::vector<std::size_t>& times,
                                     const CompositeOptions& opts) {
  if (data.cols() != static_cast<Eigen::Index>(design.sites.size())) {
    throw DimensionError("condex_composite: data columns must match sites");
  }
  if (!times.empty() && times.size() != static_cast<std::size_t>(data.rows())) {
    throw DimensionError("condex_composite: one time index per row required");
  }
  std::vector<std::shared_ptr<const TermGroup>> groups;
  for (std::size_t k = 0; k < design.conditioning.size(); ++k) {
    auto g = std::make_shared<SiteGroup>(design, k, data, times, map, opts.moment_totals);
    if (!g->keys().empty()) groups.push_back(std::move(g));
  }
  if (groups.empty()) throw ConfigError("condex_composite: no threshold exceedances at any conditioning site");
  return CompositeLikelihood(map.layout(), std::move(groups));
}

std::vector<std::size_t> exceedance_counts(const Design& design, const Eigen::MatrixXd& data) {
  std::vector<std::size_t> out;
  for (auto s0 : design.conditioning) {
    std::size_t c = 0;
    for (Eigen::Index j = 0; j < data.rows(); ++j) {
      const double v = data(j, static_cast<Eigen::Index>(s0));
      if (std::isfinite(v) && v > design.threshold) ++c;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace postadj::condex
