#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "shellstop/assess.hpp"
#include "shellstop/zip.hpp"

namespace shellstop {

struct ScanTreeReport {
  std::vector<Asset> assets;       // sorted by path
  std::vector<std::string> warnings;
};

namespace detail {

// "log4j-core-<version>.jar" -> "<version>", or nullopt.
inline std::optional<std::string> core_version_text(const std::string& filename) {
  constexpr std::string_view prefix = "log4j-core-";
  constexpr std::string_view suffix = ".jar";
  if (filename.size() <= prefix.size() + suffix.size()) return std::nullopt;
  if (filename.rfind(prefix, 0) != 0) return std::nullopt;
  if (filename.compare(filename.size() - suffix.size(), suffix.size(), suffix) != 0)
    return std::nullopt;
  return filename.substr(prefix.size(), filename.size() - prefix.size() - suffix.size());
}

}  // namespace detail

/// Walks `root` for log4j-core archives. Unreadable entries are skipped and
/// reported; jars nested inside a matched archive are reported but not opened.
inline ScanTreeReport scan_tree(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  ScanTreeReport report;
  std::error_code ec;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) {
    report.warnings.push_back(root.string() + ": " + ec.message());
    return report;
  }
  for (fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
    if (ec) {
      report.warnings.push_back(root.string() + ": " + ec.message());
      break;
    }
    std::error_code stat_ec;
    if (!it->is_regular_file(stat_ec)) {
      if (stat_ec) report.warnings.push_back(it->path().string() + ": " + stat_ec.message());
      continue;
    }
    const auto version_text = detail::core_version_text(it->path().filename().string());
    if (!version_text) continue;

    Asset asset;
    asset.name = it->path().string();
    asset.found_by_scanner = true;
    try {
      asset.version = parse_version(*version_text);
    } catch (const MalformedVersion&) {
      // Keep the asset; version stays unknown.
    }
    try {
      bool member_present = false;
      for (const auto& name : list_members(it->path())) {
        if (name == kJndiLookupMember) member_present = true;
        if (name.size() > 4 && name.compare(name.size() - 4, 4, ".jar") == 0)
          report.warnings.push_back("nested archive not scanned: " + asset.name + "!" + name);
      }
      asset.jndilookup_member_present = member_present;
    } catch (const ZipError& e) {
      report.warnings.push_back(asset.name + ": " + e.what());
    }
    report.assets.push_back(std::move(asset));
  }
  std::sort(report.assets.begin(), report.assets.end(),
            [](const Asset& a, const Asset& b) { return a.name < b.name; });
  return report;
}

}  // namespace shellstop
