#include "postadj/gaussian_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "postadj/errors.hpp"

namespace postadj {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

class FixedVarGroup : public TermGroup {
 public:
  explicit FixedVarGroup(VectorXd y) : y_(std::move(y)) {
    for (Eigen::Index j = 0; j < y_.size(); ++j) {
      keys_.push_back({0, static_cast<std::size_t>(j), 1.0});
    }
  }
  const std::vector<TermKey>& keys() const override { return keys_; }
  VectorXd evaluate(const VectorXd& theta) const override {
    return (-0.5 * kLog2Pi - 0.5 * (y_.array() - theta(0)).square()).matrix();
  }

 private:
  VectorXd y_;
  std::vector<TermKey> keys_;
};

class IidGaussianGroup : public TermGroup {
 public:
  explicit IidGaussianGroup(VectorXd y) : y_(std::move(y)) {
    for (Eigen::Index j = 0; j < y_.size(); ++j) {
      keys_.push_back({0, static_cast<std::size_t>(j), 1.0});
    }
  }
  const std::vector<TermKey>& keys() const override { return keys_; }
  VectorXd evaluate(const VectorXd& theta) const override {
    const double mu = theta(0);
    const double s = theta(1);
    return (-0.5 * kLog2Pi - std::log(s) - 0.5 * ((y_.array() - mu) / s).square()).matrix();
  }

 private:
  VectorXd y_;
  std::vector<TermKey> keys_;
};

class BlockGroup : public TermGroup {
 public:
  BlockGroup(const SiteSet& sites, const MatrixXd& data, const Blocks& blocks, double nu)
      : nu_(nu) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const SiteSet sub = sites.subset(blocks[b]);
      dist_.push_back(sub.distance_matrix());
      MatrixXd yb(blocks[b].size(), data.rows());
      for (std::size_t k = 0; k < blocks[b].size(); ++k) {
        yb.row(static_cast<Eigen::Index>(k)) = data.col(static_cast<Eigen::Index>(blocks[b][k])).transpose();
      }
      y_.push_back(std::move(yb));
      for (Eigen::Index r = 0; r < data.rows(); ++r) {
        keys_.push_back({b, static_cast<std::size_t>(r), 1.0});
      }
    }
    n_reps_ = data.rows();
  }

  const std::vector<TermKey>& keys() const override { return keys_; }

  VectorXd evaluate(const VectorXd& theta) const override {
    const double tau = theta(0);
    const double rho = theta(1);
    const double s2 = theta(2) * theta(2);
    VectorXd out(static_cast<Eigen::Index>(keys_.size()));
    for (std::size_t b = 0; b < dist_.size(); ++b) {
      const MatrixXd& d = dist_[b];
      const Eigen::Index k = d.rows();
      MatrixXd cov(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        cov(i, i) = s2 + 1.0 / tau;
        for (Eigen::Index j = i + 1; j < k; ++j) cov(i, j) = cov(j, i) = s2 * matern_corr(d(i, j), rho, nu_);
      }
      Eigen::LLT<MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) {
        out.segment(static_cast<Eigen::Index>(b) * n_reps_, n_reps_).setConstant(
            std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      const MatrixXd w = llt.matrixL().solve(y_[b]);
      out.segment(static_cast<Eigen::Index>(b) * n_reps_, n_reps_) =
          (-0.5 * (static_cast<double>(k) * kLog2Pi + logdet) - 0.5 * w.colwise().squaredNorm().array())
              .transpose()
              .matrix();
    }
    return out;
  }

 private:
  double nu_;
  Eigen::Index n_reps_ = 0;
  std::vector<MatrixXd> dist_;
  std::vector<MatrixXd> y_;  // block sites x replicates
  std::vector<TermKey> keys_;
};

class GmrfFieldGroup : public TermGroup {
 public:
  GmrfFieldGroup(const GridGmrf& grid, const SiteSet& sites, const MatrixXd& data) : grid_(grid) {
    if (data.cols() != static_cast<Eigen::Index>(sites.size())) {
      throw DimensionError("gmrf_field_loglik: data columns must match sites");
    }
    const MatrixXd a = grid.projection(sites);
    ata_ = a.transpose() * a;
    aty_ = a.transpose() * data.transpose();
    yty_ = data.rowwise().squaredNorm();
    n_sites_ = data.cols();
    n_reps_ = data.rows();
    sum_yty_ = yty_.sum();
    if (n_reps_ > grid.num_nodes()) {
      aty_outer_ = aty_ * aty_.transpose();
    }
    for (Eigen::Index r = 0; r < n_reps_; ++r) keys_.push_back({0, static_cast<std::size_t>(r), 1.0});
  }

  const std::vector<TermKey>& keys() const override { return keys_; }

  VectorXd evaluate(const VectorXd& theta) const override {
    Factors f;
    if (!factor(theta, f)) return VectorXd::Constant(n_reps_, std::numeric_limits<double>::quiet_NaN());
    const MatrixXd w = f.p.matrixL().solve(aty_);
    const double tau = theta(0);
    const VectorXd quad = tau * yty_ - tau * tau * w.colwise().squaredNorm().transpose();
    return (-0.5 * (static_cast<double>(n_sites_) * kLog2Pi + f.logdet_sigma) - 0.5 * quad.array())
        .matrix();
  }

  double weighted_total(const VectorXd& theta) const override {
    Factors f;
    if (!factor(theta, f)) return std::numeric_limits<double>::quiet_NaN();
    const double tau = theta(0);
    double trace;
    if (aty_outer_.size() > 0) {
      trace = f.p.solve(aty_outer_).trace();
    } else {
      trace = f.p.matrixL().solve(aty_).squaredNorm();
    }
    const double n = static_cast<double>(n_reps_);
    return -0.5 * (n * (static_cast<double>(n_sites_) * kLog2Pi + f.logdet_sigma) + tau * sum_yty_ -
                   tau * tau * trace);
  }

 private:
  struct Factors {
    Eigen::LLT<MatrixXd> p;
    double logdet_sigma = 0.0;
  };

  bool factor(const VectorXd& theta, Factors& f) const {
    const double tau = theta(0);
    const MaternParams mp{theta(2) * theta(2), theta(1), 1.0};
    const MatrixXd q = grid_.precision(mp);
    Eigen::LLT<MatrixXd> lq(q);
    if (lq.info() != Eigen::Success) return false;
    f.p.compute(q + tau * ata_);
    if (f.p.info() != Eigen::Success) return false;
    const double logdet_p = 2.0 * f.p.matrixLLT().diagonal().array().log().sum();
    const double logdet_q = 2.0 * lq.matrixLLT().diagonal().array().log().sum();
    f.logdet_sigma = logdet_p - logdet_q - static_cast<double>(n_sites_) * std::log(tau);
    return true;
  }

  GridGmrf grid_;
  MatrixXd ata_;
  MatrixXd aty_;        // nodes x replicates
  MatrixXd aty_outer_;  // only kept when replicates outnumber nodes
  VectorXd yty_;
  double sum_yty_ = 0.0;
  Eigen::Index n_sites_ = 0;
  Eigen::Index n_reps_ = 0;
  std::vector<TermKey> keys_;
};

}  // namespace

double mvn_logpdf_chol(const VectorXd& y, const VectorXd& mean, const MatrixXd& chol_lower) {
  const VectorXd w = chol_lower.triangularView<Eigen::Lower>().solve(y - mean);
  const double logdet = 2.0 * chol_lower.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(y.size()) * kLog2Pi + logdet + w.squaredNorm());
}

CompositeLikelihood gaussian_fixed_var_loglik(const VectorXd& y) {
  if (y.size() == 0 || !y.allFinite()) throw NumericDomainError("gaussian_fixed_var_loglik: bad data");
  ParamLayout layout({"mu"}, {Link::identity});
  return CompositeLikelihood(layout, {std::make_shared<FixedVarGroup>(y)});
}

CompositeLikelihood gaussian_iid_loglik(const VectorXd& y) {
  if (y.size() == 0 || !y.allFinite()) throw NumericDomainError("gaussian_iid_loglik: bad data");
  ParamLayout layout({"mu", "sigma"}, {Link::identity, Link::log});
  return CompositeLikelihood(layout, {std::make_shared<IidGaussianGroup>(y)});
}

VectorXd student_t_sample(double df, Eigen::Index n, Rng& rng) {
  if (!(df > 0.0)) throw NumericDomainError("student_t_sample: df must be positive");
  std::student_t_distribution<double> dist(df);
  VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = dist(rng);
  return out;
}

Blocks rectangular_blocks(const SiteSet& sites, double x_min, double x_max, double y_min,
                          double y_max, std::size_t nbx, std::size_t nby) {
  if (nbx == 0 || nby == 0 || !(x_max > x_min) || !(y_max > y_min)) {
    throw ConfigError("rectangular_blocks: invalid block layout");
  }
  Blocks cells(nbx * nby);
  const double wx = (x_max - x_min) / static_cast<double>(nbx);
  const double wy = (y_max - y_min) / static_cast<double>(nby);
  for (std::size_t s = 0; s < sites.size(); ++s) {
    auto bx = static_cast<long>(std::floor((sites[s][0] - x_min) / wx));
    auto by = static_cast<long>(std::floor((sites[s][1] - y_min) / wy));
    bx = std::clamp(bx, 0L, static_cast<long>(nbx) - 1);
    by = std::clamp(by, 0L, static_cast<long>(nby) - 1);
    cells[static_cast<std::size_t>(by) * nbx + static_cast<std::size_t>(bx)].push_back(s);
  }
  Blocks out;
  for (auto& c : cells) {
    if (!c.empty()) out.push_back(std::move(c));
  }
  return out;
}

ParamLayout field_layout() {
  return ParamLayout({"tau", "rho", "sigma"}, {Link::log, Link::log, Link::log});
}

CompositeLikelihood block_composite_gaussian(const SiteSet& sites, const MatrixXd& data,
                                             const Blocks& blocks, double nu) {
  if (data.cols() != static_cast<Eigen::Index>(sites.size())) {
    throw DimensionError("block_composite_gaussian: data columns must match sites");
  }
  std::vector<int> seen(sites.size(), 0);
  for (const auto& b : blocks) {
    if (b.empty()) throw ConfigError("block_composite_gaussian: empty block");
    for (auto s : b) {
      if (s >= sites.size()) throw DimensionError("block_composite_gaussian: bad site index");
      ++seen[s];
    }
  }
  for (int c : seen) {
    if (c != 1) throw ConfigError("block_composite_gaussian: blocks must partition the sites");
  }
  return CompositeLikelihood(field_layout(), {std::make_shared<BlockGroup>(sites, data, blocks, nu)});
}

CompositeLikelihood gmrf_field_loglik(const GridGmrf& grid, const SiteSet& sites,
                                      const MatrixXd& data) {
  return CompositeLikelihood(field_layout(), {std::make_shared<GmrfFieldGroup>(grid, sites, data)});
}

}  // namespace postadj
