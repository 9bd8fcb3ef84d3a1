#ifndef POSTADJ_CONDEX_PANEL_IO_HPP
#define POSTADJ_CONDEX_PANEL_IO_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "postadj/random_fields.hpp"

namespace postadj::condex {

/// Space-time panel: values(j, k) is the observation at time times[j] and
/// site k; NaN marks a missing value.
struct Panel {
  SiteSet sites;
  std::vector<std::size_t> site_ids;
  std::vector<std::size_t> times;
  Eigen::MatrixXd values;
};

/// Panel with consecutive site ids and time indices starting at 0.
Panel make_panel(SiteSet sites, Eigen::MatrixXd values);

/// CSV with header "site-id,x-km,y-km,time-index,value", one row per
/// observation. Rows are written ordered by time index, then site id; missing
/// values are not written.
void write_panel_csv(std::ostream& os, const Panel& panel);
void write_panel_csv(const std::string& path, const Panel& panel);

/// Rows may come in any order. Site ids and time indices are sorted; a site
/// must keep the same coordinates on every row and a (site, time) pair may
/// appear once.
Panel read_panel_csv(std::istream& is);
Panel read_panel_csv(const std::string& path);

}  // namespace postadj::condex

#endif  // POSTADJ_CONDEX_PANEL_IO_HPP
