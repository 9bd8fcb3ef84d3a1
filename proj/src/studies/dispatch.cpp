#include <map>

#include "postadj/studies/studies.hpp"

namespace postadj::studies {

namespace {

struct StudyEntry {
  StudyResult (*run)(const StudyConfig&);
  std::size_t desk_reps;
  std::size_t paper_reps;
};

const std::map<std::string, StudyEntry>& registry() {
  static const std::map<std::string, StudyEntry> r{
      {"student-t", {run_student_t_study, 200, 1000}},
      {"coarse-grid", {run_coarse_grid_study, 100, 300}},
      {"block-composite", {run_block_composite_study, 100, 300}},
      {"condex-global", {run_condex_global_study, 50, 300}},
      {"condex-gaussian-s2", {run_condex_gaussian_s2_study, 50, 300}},
      {"self-inconsistency", {run_self_inconsistency_study, 1, 1}},
      {"logscore", {run_logscore_study, 1, 1}},
  };
  return r;
}

const StudyEntry& entry(const std::string& id) {
  const auto it = registry().find(id);
  if (it == registry().end()) throw ConfigError("unknown study '" + id + "'");
  return it->second;
}

}  // namespace

const std::vector<std::string>& study_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& [id, e] : registry()) v.push_back(id);
    return v;
  }();
  return ids;
}

std::size_t default_reps(const std::string& study, bool paper_scale) {
  const StudyEntry& e = entry(study);
  return paper_scale ? e.paper_reps : e.desk_reps;
}

StudyResult run_study(StudyConfig cfg) {
  const StudyEntry& e = entry(cfg.study);
  if (cfg.reps == 0) cfg.reps = cfg.paper_scale ? e.paper_reps : e.desk_reps;
  if (cfg.n_draws < 10) throw ConfigError("n_draws must be at least 10");
  return e.run(cfg);
}

}  // namespace postadj::studies
