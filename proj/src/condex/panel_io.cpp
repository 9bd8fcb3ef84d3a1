#include "postadj/condex/panel_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "postadj/errors.hpp"

namespace postadj::condex {

namespace {

constexpr const char* kHeader = "site-id,x-km,y-km,time-index,value";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t k = 0;
  while (k < s.size() && s[k] == ' ') ++k;
  return s.substr(k);
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("panel csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

std::size_t parse_index(const std::string& s, std::size_t line) {
  const double v = parse_double(s, line);
  if (v < 0.0 || v != std::floor(v)) {
    throw ConfigError("panel csv line " + std::to_string(line) + ": bad index '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

Panel make_panel(SiteSet sites, Eigen::MatrixXd values) {
  if (values.cols() != static_cast<Eigen::Index>(sites.size())) {
    throw DimensionError("make_panel: one column per site required");
  }
  Panel p;
  for (std::size_t k = 0; k < sites.size(); ++k) p.site_ids.push_back(k);
  for (Eigen::Index j = 0; j < values.rows(); ++j) p.times.push_back(static_cast<std::size_t>(j));
  p.sites = std::move(sites);
  p.values = std::move(values);
  return p;
}

void write_panel_csv(std::ostream& os, const Panel& panel) {
  os << kHeader << '\n' << std::setprecision(17);
  for (Eigen::Index j = 0; j < panel.values.rows(); ++j) {
    for (Eigen::Index k = 0; k < panel.values.cols(); ++k) {
      const double v = panel.values(j, k);
      if (std::isnan(v)) continue;
      const auto& s = panel.sites[static_cast<std::size_t>(k)];
      os << panel.site_ids[static_cast<std::size_t>(k)] << ',' << s[0] << ',' << s[1] << ','
         << panel.times[static_cast<std::size_t>(j)] << ',' << v << '\n';
    }
  }
}

void write_panel_csv(const std::string& path, const Panel& panel) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  write_panel_csv(os, panel);
}

Panel read_panel_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kHeader) {
    throw ConfigError(std::string("panel csv: expected header '") + kHeader + "'");
  }
  struct Row {
    std::size_t site, time;
    double value;
  };
  std::vector<Row> rows;
  std::map<std::size_t, Site> coords;
  std::map<std::size_t, std::size_t> time_pos;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 5) throw ConfigError("panel csv line " + std::to_string(n) + ": expected 5 columns");
    const std::size_t id = parse_index(trim(cells[0]), n);
    const Site xy{parse_double(trim(cells[1]), n), parse_double(trim(cells[2]), n)};
    const std::size_t t = parse_index(trim(cells[3]), n);
    const double v = parse_double(trim(cells[4]), n);
    auto [it, fresh] = coords.try_emplace(id, xy);
    if (!fresh && it->second != xy) {
      throw ConfigError("panel csv line " + std::to_string(n) + ": site " + std::to_string(id) + " moved");
    }
    time_pos.try_emplace(t, 0);
    rows.push_back({id, t, v});
  }
  if (rows.empty()) throw ConfigError("panel csv: no observations");

  Panel p;
  std::map<std::size_t, std::size_t> site_pos;
  std::vector<Site> xy;
  for (const auto& [id, c] : coords) {
    site_pos[id] = p.site_ids.size();
    p.site_ids.push_back(id);
    xy.push_back(c);
  }
  for (auto& [t, pos] : time_pos) {
    pos = p.times.size();
    p.times.push_back(t);
  }
  p.sites = SiteSet(std::move(xy));
  p.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(p.times.size()),
                                       static_cast<Eigen::Index>(p.site_ids.size()),
                                       std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : rows) {
    double& cell = p.values(static_cast<Eigen::Index>(time_pos[r.time]), static_cast<Eigen::Index>(site_pos[r.site]));
    if (!std::isnan(cell)) {
      throw ConfigError("panel csv: duplicate observation for site " + std::to_string(r.site) + " at time " +
                        std::to_string(r.time));
    }
    cell = r.value;
  }
  return p;
}

Panel read_panel_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  return read_panel_csv(is);
}

}  // namespace postadj::condex
