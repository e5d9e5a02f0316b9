#pragma once

#include <set>
#include <string>
#include <vector>

#include "shellstop/version.hpp"

namespace shellstop {

/// One advisory row: an inclusive affected range with point exclusions.
struct CveRange {
  std::string id;
  double rating = 0.0;  // CVSS
  Log4jVersion floor;
  Log4jVersion ceiling;
  std::vector<Log4jVersion> exclusions;

  bool contains(const Log4jVersion& v) const {
    if (v < floor || ceiling < v) return false;
    for (const auto& e : exclusions)
      if (e == v) return false;
    return true;
  }
};

inline const std::vector<CveRange>& builtin_cve_table() {
  static const std::vector<CveRange> table = {
      {"CVE-2021-44228", 10.0, {2, 0, 0, 9}, {2, 15, 0, {}}, {}},
      {"CVE-2021-45046", 9.0, {2, 0, 0, 9}, {2, 15, 0, {}}, {{2, 12, 2, {}}}},
      {"CVE-2021-44832", 6.6, {2, 0, 0, 7}, {2, 17, 0, {}}, {{2, 3, 2, {}}, {2, 12, 4, {}}}},
  };
  return table;
}

inline std::set<std::string> cve_matches(const Log4jVersion& v) {
  std::set<std::string> out;
  for (const auto& r : builtin_cve_table())
    if (r.contains(v)) out.insert(r.id);
  return out;
}

}  // namespace shellstop
