#ifndef POSTADJ_STUDIES_COMMON_HPP
#define POSTADJ_STUDIES_COMMON_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "postadj/errors.hpp"
#include "postadj/likelihoods.hpp"
#include "postadj/rng.hpp"
#include "postadj/sandwich.hpp"

namespace postadj::studies {

inline constexpr std::array<double, 3> kLevels{0.90, 0.95, 0.99};

enum Method : std::size_t { unadjusted = 0, adjusted = 1 };

struct StudyConfig {
  std::string study;
  std::size_t reps = 0;  // 0 selects the study default
  std::uint64_t seed = 1;
  SamplerKind sampler = SamplerKind::laplace;
  Eigen::Index n_draws = 5000;
  std::size_t workers = 0;  // 0 selects std::thread::hardware_concurrency()
  bool paper_scale = false;
  nlohmann::json params = nlohmann::json::object();  // per-study overrides
  std::string oracle_cache;  // directory for cached theta* oracles; empty disables caching

  template <typename T>
  T param(const std::string& key, T fallback) const {
    return params.contains(key) ? params.at(key).get<T>() : fallback;
  }
  nlohmann::json to_json() const;
};

/// One replication of a coverage study. contains[m][k][l] is true when the
/// level-l interval of method m for parameter k contains theta*.
struct RepOutcome {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  Eigen::VectorXd mode;  // posterior mode, natural scale
  std::array<std::vector<std::array<bool, 3>>, 2> contains;
  std::array<std::vector<std::array<double, 3>>, 2> lower, upper;
  std::uint64_t unadjusted_checksum = 0;
  std::uint64_t adjusted_source_checksum = 0;
  Warnings warnings;
};

struct CoverageTable {
  std::string study;
  std::uint64_t seed = 0;
  std::vector<std::string> params;
  std::size_t reps_requested = 0;
  std::size_t reps_used = 0;
  std::array<std::vector<std::array<std::size_t, 3>>, 2> counts;

  CoverageTable() = default;
  CoverageTable(std::string study, std::vector<std::string> params, std::size_t reps_requested);

  void add(const RepOutcome& r);
  double rate(Method m, std::size_t k, std::size_t level) const;
  /// Counts non-decreasing in the level for every parameter and method.
  bool nested() const;

  /// Columns: study,seed,parameter,level,method,count,reps.
  std::string to_csv() const;
  static CoverageTable from_csv(const std::string& text);
  /// Percentages, one row per level, each parameter followed by its adjusted column.
  std::string pretty() const;
};

struct ThetaStarOracle {
  std::string study;
  std::vector<std::string> names;
  Eigen::VectorXd theta;
  std::string method;  // "analytic" or "large-n MLE"
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  bool converged = true;
  std::string key;  // identifies the design the oracle was computed for

  nlohmann::json to_json() const;
  static ThetaStarOracle from_json(const nlohmann::json& j);
};

/// Loads `<dir>/theta_star_<study>.json` when it exists and matches `key`,
/// seed and sample size; otherwise calls `compute` and stores the result.
ThetaStarOracle cached_oracle(const StudyConfig& cfg, const std::string& key, std::size_t sample_size,
                              const std::function<ThetaStarOracle()>& compute);

/// Per-replication streams: index `i` of purpose `p` under the master seed.
Rng rep_stream(std::uint64_t master, std::uint64_t purpose, std::size_t i);
std::uint64_t rep_seed(std::uint64_t master, std::uint64_t purpose, std::size_t i);

enum StreamPurpose : std::uint64_t { data_stream = 1, pipeline_stream = 2, oracle_stream = 3, design_stream = 4 };

/// Runs fn(i) for i in [0, n) on a worker pool and returns the outcomes in
/// index order. Exceptions become failed outcomes carrying the message.
std::vector<RepOutcome> run_replications(std::size_t n, std::size_t workers,
                                         const std::function<RepOutcome(std::size_t)>& fn);

/// Runs the adjustment pipeline and scores interval membership of theta*.
/// Fails the replication when the mode search did not converge or the
/// adjusted draws do not derive from the unadjusted ones.
RepOutcome score_pipeline(std::size_t index, const CompositeLikelihood& cl, const PriorSet& priors,
                          const PipelineConfig& pc, const Eigen::VectorXd& theta_star);

PipelineConfig pipeline_config(const StudyConfig& cfg, std::size_t index, const Eigen::VectorXd& theta_init);

/// Maximum composite likelihood estimate with a flat prior on the unconstrained scale.
ModeResult composite_mle(const CompositeLikelihood& cl, const Eigen::VectorXd& theta_init,
                         const OptimOptions& opts = {});

struct StudyResult {
  StudyConfig config;
  CoverageTable table;
  std::optional<ThetaStarOracle> oracle;
  std::vector<RepOutcome> reps;
  nlohmann::json extra = nlohmann::json::object();  // study-specific report
  std::vector<std::pair<std::string, std::string>> extra_tables;  // file name, contents
  double wall_seconds = 0.0;
};

/// Replication records: seed,rep,status,parameter,mode,method,level,lower,upper,contains,checksum.
std::string replications_csv(const StudyResult& r);

/// Writes coverage.csv, replications.csv, theta_star.json (when present),
/// extra tables and manifest.json into `dir`.
void emit_outputs(const StudyResult& r, const std::string& dir);

}  // namespace postadj::studies

#endif  // POSTADJ_STUDIES_COMMON_HPP
