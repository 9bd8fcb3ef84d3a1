#include "postadj/studies/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "postadj/inference.hpp"

#ifndef POSTADJ_VERSION
#define POSTADJ_VERSION "unknown"
#endif

namespace postadj::studies {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const char* method_name(std::size_t m) { return m == unadjusted ? "unadjusted" : "adjusted"; }

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + p.string());
  os << text;
  if (!os) throw ConfigError("write failed for " + p.string());
}

}  // namespace

nlohmann::json StudyConfig::to_json() const {
  return {{"study", study},
          {"reps", reps},
          {"seed", seed},
          {"sampler", sampler == SamplerKind::laplace ? "laplace" : "mcmc"},
          {"n_draws", n_draws},
          {"paper_scale", paper_scale},
          {"params", params}};
}

CoverageTable::CoverageTable(std::string s, std::vector<std::string> p, std::size_t n)
    : study(std::move(s)), params(std::move(p)), reps_requested(n) {
  for (auto& c : counts) c.assign(params.size(), {0, 0, 0});
}

void CoverageTable::add(const RepOutcome& r) {
  if (!r.ok) return;
  for (std::size_t m = 0; m < 2; ++m) {
    if (r.contains[m].size() != params.size()) throw DimensionError("CoverageTable: parameter count mismatch");
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t l = 0; l < kLevels.size(); ++l) counts[m][k][l] += r.contains[m][k][l] ? 1 : 0;
    }
  }
  ++reps_used;
}

double CoverageTable::rate(Method m, std::size_t k, std::size_t level) const {
  return reps_used ? static_cast<double>(counts[m][k][level]) / static_cast<double>(reps_used) : 0.0;
}

bool CoverageTable::nested() const {
  for (const auto& c : counts) {
    for (const auto& row : c) {
      if (row[0] > row[1] || row[1] > row[2] || row[2] > reps_used) return false;
    }
  }
  return true;
}

std::string CoverageTable::to_csv() const {
  std::ostringstream os;
  os << "study,seed,parameter,level,method,count,reps\n";
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t l = 0; l < kLevels.size(); ++l) {
      for (std::size_t m = 0; m < 2; ++m) {
        os << study << ',' << seed << ',' << params[k] << ',' << fmt(kLevels[l]) << ',' << method_name(m) << ','
           << counts[m][k][l] << ',' << reps_used << '\n';
      }
    }
  }
  return os.str();
}

CoverageTable CoverageTable::from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "study,seed,parameter,level,method,count,reps") {
    throw ConfigError("coverage csv: unexpected header");
  }
  CoverageTable t;
  std::vector<std::array<std::string, 7>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::array<std::string, 7> cells;
    std::istringstream ls(line);
    for (auto& c : cells) {
      if (!std::getline(ls, c, ',')) throw ConfigError("coverage csv: short row");
    }
    rows.push_back(cells);
    if (std::find(t.params.begin(), t.params.end(), cells[2]) == t.params.end()) t.params.push_back(cells[2]);
  }
  if (rows.empty()) throw ConfigError("coverage csv: no rows");
  t.study = rows.front()[0];
  t.seed = std::stoull(rows.front()[1]);
  t.reps_used = std::stoul(rows.front()[6]);
  t.reps_requested = t.reps_used;
  for (auto& c : t.counts) c.assign(t.params.size(), {0, 0, 0});
  for (const auto& r : rows) {
    const auto k = static_cast<std::size_t>(std::find(t.params.begin(), t.params.end(), r[2]) - t.params.begin());
    const double level = std::stod(r[3]);
    std::size_t l = 0;
    while (l < kLevels.size() && std::abs(kLevels[l] - level) > 1e-9) ++l;
    if (l == kLevels.size()) throw ConfigError("coverage csv: unknown level " + r[3]);
    const std::size_t m = r[4] == "unadjusted" ? unadjusted : adjusted;
    t.counts[m][k][l] = std::stoul(r[5]);
  }
  return t;
}

std::string CoverageTable::pretty() const {
  std::ostringstream os;
  os << "Aim ";
  for (const auto& p : params) os << std::setw(10) << p << std::setw(10) << (p + "_adj");
  os << '\n';
  for (std::size_t l = 0; l < kLevels.size(); ++l) {
    os << std::setw(3) << static_cast<int>(kLevels[l] * 100 + 0.5) << '%';
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t m = 0; m < 2; ++m) {
        os << std::setw(9) << static_cast<int>(100.0 * rate(static_cast<Method>(m), k, l) + 0.5) << '%';
      }
    }
    os << '\n';
  }
  os << "(" << reps_used << " of " << reps_requested << " replications used)\n";
  return os.str();
}

nlohmann::json ThetaStarOracle::to_json() const {
  return {{"study", study},
          {"names", names},
          {"theta", std::vector<double>(theta.data(), theta.data() + theta.size())},
          {"method", method},
          {"sample_size", sample_size},
          {"seed", seed},
          {"converged", converged},
          {"key", key}};
}

ThetaStarOracle ThetaStarOracle::from_json(const nlohmann::json& j) {
  ThetaStarOracle o;
  o.study = j.at("study").get<std::string>();
  o.names = j.at("names").get<std::vector<std::string>>();
  const auto v = j.at("theta").get<std::vector<double>>();
  o.theta = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  o.method = j.at("method").get<std::string>();
  o.sample_size = j.at("sample_size").get<std::size_t>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.converged = j.value("converged", true);
  o.key = j.value("key", "");
  return o;
}

ThetaStarOracle cached_oracle(const StudyConfig& cfg, const std::string& key, std::size_t sample_size,
                              const std::function<ThetaStarOracle()>& compute) {
  std::filesystem::path path;
  if (!cfg.oracle_cache.empty()) {
    path = std::filesystem::path(cfg.oracle_cache) / ("theta_star_" + cfg.study + ".json");
    std::ifstream is(path);
    if (is) {
      try {
        const ThetaStarOracle o = ThetaStarOracle::from_json(nlohmann::json::parse(is));
        if (o.key == key && o.seed == cfg.seed && o.sample_size == sample_size) return o;
      } catch (const std::exception&) {
        // stale or unreadable cache entry: recompute
      }
    }
  }
  ThetaStarOracle o = compute();
  o.key = key;
  o.seed = cfg.seed;
  o.sample_size = sample_size;
  if (!path.empty()) {
    std::filesystem::create_directories(path.parent_path());
    write_file(path, o.to_json().dump(2) + "\n");
  }
  return o;
}

std::uint64_t rep_seed(std::uint64_t master, std::uint64_t purpose, std::size_t i) {
  return derive_seed(derive_seed(master, purpose), i);
}

Rng rep_stream(std::uint64_t master, std::uint64_t purpose, std::size_t i) {
  return make_stream(derive_seed(master, purpose), i);
}

std::vector<RepOutcome> run_replications(std::size_t n, std::size_t workers,
                                         const std::function<RepOutcome(std::size_t)>& fn) {
  std::vector<RepOutcome> out(n);
  std::size_t w = workers ? workers : std::max(1u, std::thread::hardware_concurrency());
  w = std::min(w, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (const std::exception& e) {
        out[i] = RepOutcome{};
        out[i].error = e.what();
      }
      out[i].index = i;
    }
  };
  if (w <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < w; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return out;
}

PipelineConfig pipeline_config(const StudyConfig& cfg, std::size_t index, const Eigen::VectorXd& theta_init) {
  PipelineConfig pc;
  pc.sampler = cfg.sampler;
  pc.n_draws = cfg.n_draws;
  pc.seed = rep_seed(cfg.seed, pipeline_stream, index);
  pc.theta_init = theta_init;
  return pc;
}

RepOutcome score_pipeline(std::size_t index, const CompositeLikelihood& cl, const PriorSet& priors,
                          const PipelineConfig& pc, const Eigen::VectorXd& theta_star) {
  RepOutcome r;
  r.index = index;
  const PipelineResult res = full_adjustment_pipeline(cl, priors, pc);
  r.mode = res.mode.mode.theta;
  r.warnings = res.warnings;
  r.unadjusted_checksum = res.unadjusted.checksum();
  r.adjusted_source_checksum = res.adjusted.source_checksum;
  if (!res.mode.mode.converged) {
    r.error = "mode search did not converge: " + res.mode.mode.status;
    return r;
  }
  if (r.unadjusted_checksum != r.adjusted_source_checksum) {
    r.error = "adjusted draws do not derive from the unadjusted draws";
    return r;
  }
  const auto p = static_cast<std::size_t>(theta_star.size());
  const PosteriorDraws* sets[2] = {&res.unadjusted, &res.adjusted};
  for (std::size_t m = 0; m < 2; ++m) {
    r.contains[m].assign(p, {false, false, false});
    r.lower[m].assign(p, {0, 0, 0});
    r.upper[m].assign(p, {0, 0, 0});
    for (std::size_t l = 0; l < kLevels.size(); ++l) {
      const CredibleInterval ci = credible_interval(*sets[m], kLevels[l]);
      for (std::size_t k = 0; k < p; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        r.contains[m][k][l] = ci.contains(kk, theta_star(kk));
        r.lower[m][k][l] = ci.lower(kk);
        r.upper[m][k][l] = ci.upper(kk);
      }
    }
  }
  r.ok = true;
  return r;
}

ModeResult composite_mle(const CompositeLikelihood& cl, const Eigen::VectorXd& theta_init,
                         const OptimOptions& opts) {
  return find_mode(unconstrained_objective(cl), cl.layout(), theta_init, opts);
}

std::string replications_csv(const StudyResult& r) {
  std::ostringstream os;
  os << "seed,rep,status,parameter,mode,method,level,lower,upper,contains,checksum\n";
  for (const auto& rep : r.reps) {
    if (!rep.ok) {
      os << r.config.seed << ',' << rep.index << ",failed,,,,,,,," << '"' << rep.error << '"' << '\n';
      continue;
    }
    for (std::size_t k = 0; k < r.table.params.size(); ++k) {
      for (std::size_t m = 0; m < 2; ++m) {
        for (std::size_t l = 0; l < kLevels.size(); ++l) {
          os << r.config.seed << ',' << rep.index << ",ok," << r.table.params[k] << ',' << fmt(rep.mode(static_cast<Eigen::Index>(k)))
             << ',' << method_name(m) << ',' << fmt(kLevels[l]) << ',' << fmt(rep.lower[m][k][l]) << ','
             << fmt(rep.upper[m][k][l]) << ',' << (rep.contains[m][k][l] ? 1 : 0) << ','
             << hex(m == unadjusted ? rep.unadjusted_checksum : rep.adjusted_source_checksum) << '\n';
        }
      }
    }
  }
  return os.str();
}

void emit_outputs(const StudyResult& r, const std::string& dir) {
  const std::filesystem::path d(dir);
  std::filesystem::create_directories(d);
  if (!r.table.params.empty()) {
    write_file(d / "coverage.csv", r.table.to_csv());
    write_file(d / "replications.csv", replications_csv(r));
  }
  if (r.oracle) write_file(d / "theta_star.json", r.oracle->to_json().dump(2) + "\n");
  for (const auto& [name, text] : r.extra_tables) write_file(d / name, text);

  std::size_t failed = 0;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& rep : r.reps) {
    if (!rep.ok) {
      ++failed;
      failures.push_back({{"rep", rep.index}, {"cause", rep.error}});
    }
  }
  nlohmann::json manifest = {{"config", r.config.to_json()},
                             {"seed", r.config.seed},
                             {"version", POSTADJ_VERSION},
                             {"wall_seconds", r.wall_seconds},
                             {"replications", r.reps.size()},
                             {"replications_failed", failed},
                             {"failures", failures},
                             {"report", r.extra}};
  write_file(d / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace postadj::studies
