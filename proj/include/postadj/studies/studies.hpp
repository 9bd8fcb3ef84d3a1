#ifndef POSTADJ_STUDIES_STUDIES_HPP
#define POSTADJ_STUDIES_STUDIES_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "postadj/studies/common.hpp"

namespace postadj::studies {

/// Study ids accepted by run_study.
const std::vector<std::string>& study_ids();

/// Replication count used when cfg.reps == 0.
std::size_t default_reps(const std::string& study, bool paper_scale);

StudyResult run_study(StudyConfig cfg);

/// Gaussian model with unit variance fitted to t_1 data; theta* = 0.
/// params: n (100).
StudyResult run_student_t_study(const StudyConfig& cfg);

/// Exact Matérn(nu = 1.5) data plus nugget at uniform random sites, fitted with
/// a coarse grid GMRF (nu = 1). theta* from a large-n MLE.
/// params: n_sites (400), replicates (200), spacing (5), extension_cells (6),
/// tau (100), rho (12), sigma (1), oracle_n (10000).
StudyResult run_coarse_grid_study(const StudyConfig& cfg);

/// Exact Matérn data fitted with an independent-blocks composite likelihood
/// built from the same covariance family, so theta* = theta.
/// params: n_sites (400), replicates (100), blocks_per_side (5), tau, rho, sigma, nu (1.5).
StudyResult run_block_composite_study(const StudyConfig& cfg);

/// Global conditional extremes data (Wadsworth path) fitted with the
/// composite conditional likelihood over a subgrid of conditioning sites.
/// params: nx (13), spacing (2), stride (2), radius (8), replicates (100),
/// rho_b ("fixed" | "free", default "fixed"), oracle_n (20000).
StudyResult run_condex_global_study(const StudyConfig& cfg);

/// Conditional extremes fit to Laplace-transformed Gaussian Matérn fields,
/// rho_b fixed at its oracle value.
/// params: nx (15), spacing (1), range (8), nu (1), stride (3), offset (1),
/// radius (4), replicates (500), oracle_n (20000).
StudyResult run_condex_gaussian_s2_study(const StudyConfig& cfg);

/// Quadrature and Monte Carlo probabilities along both integration paths.
/// params: mu (0), sigma (1), alpha (0.9), beta (0.8), t (4), samples (1e6).
StudyResult run_self_inconsistency_study(const StudyConfig& cfg);

/// Log-score comparison of adjusted and unadjusted fits on held-out
/// conditioning sites of synthetic global data whose lambda and sigma drift
/// across the grid by exp(+-heterogeneity).
/// params: nx (13), spacing (2), stride (2), radius (8), replicates (600),
/// n_s (500), single_site_models (4), heterogeneity (0.5).
StudyResult run_logscore_study(const StudyConfig& cfg);

struct ModelDraws {
  std::string id;
  Eigen::MatrixXd draws;  // natural scale, one row per draw
};

struct HeldOutSite {
  std::size_t site = 0;
  std::function<double(const Eigen::VectorXd&)> loglik;  // empty when the site has no exceedances
};

/// Per-site log-scores and ranks (1 = best; ties go to the smaller model id, then the earlier model).
struct Ranking {
  std::vector<std::string> models;
  std::vector<std::size_t> sites;
  Eigen::MatrixXd scores;  // sites x models
  Eigen::MatrixXi ranks;   // sites x models
  std::vector<std::size_t> skipped;

  /// Columns: seed,site,model,log_score,rank.
  std::string to_csv(std::uint64_t seed) const;
  /// Columns: seed,model,rank,count.
  std::string histogram_csv(std::uint64_t seed) const;
  /// Fraction of sites where model a scores strictly above model b.
  double fraction_better(std::size_t a, std::size_t b) const;
};

/// Scores every model at every held-out site with log-mean-exp over n_s
/// evenly thinned draws. A loglik that throws scores -inf.
Ranking rank_by_logscore(const std::vector<ModelDraws>& models, const std::vector<HeldOutSite>& sites,
                         std::size_t n_s = 500);

}  // namespace postadj::studies

#endif  // POSTADJ_STUDIES_STUDIES_HPP
