#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shellstop/cve.hpp"

namespace shellstop {

enum class JavaMajor { Java6, Java7, Java8Plus };

struct Asset {
  std::string name;
  std::optional<Log4jVersion> version;
  bool on_vulnerable_apps_list = false;
  bool found_by_scanner = false;
  std::optional<bool> jndilookup_member_present;
  bool format_msg_no_lookups_set = false;
  std::optional<JavaMajor> java_major;
};

enum class AssessMode { Flowchart, CveTable };

enum class VerdictClass { Vulnerable, LikelyNotVulnerable, NotVulnerable };

struct Remediation {
  Log4jVersion upgrade_target;
  std::vector<std::string> tactics;
  std::vector<std::string> notes;
};

struct AssessmentVerdict {
  VerdictClass verdict = VerdictClass::Vulnerable;
  AssessMode mode = AssessMode::CveTable;
  std::set<std::string> applicable_cves;
  Remediation remediation;
};

struct InsufficientEvidence : std::runtime_error {
  explicit InsufficientEvidence(const std::string& what) : std::runtime_error(what) {}
};

/// CISA's five containment tactics for hosts that cannot be upgraded, in the
/// order they escalate from unplugging to traffic shaping.
inline const std::array<std::string, 5>& cisa_tactics() {
  static const std::array<std::string, 5> tactics = {
      "Physical Removal from Network",
      "Isolation in a 'Jail VLAN'",
      "Network Layer Traffic Blocking",
      "Firewall with Stringent Port Control and Logging",
      "Restricting Communication with Affected Assets",
  };
  return tactics;
}

inline Remediation recommend(const Asset& asset) {
  Remediation r;
  const JavaMajor java = asset.java_major.value_or(JavaMajor::Java8Plus);
  switch (java) {
    case JavaMajor::Java8Plus: r.upgrade_target = {2, 17, 1}; break;
    case JavaMajor::Java7: r.upgrade_target = {2, 12, 4}; break;
    case JavaMajor::Java6: r.upgrade_target = {2, 3, 2}; break;
  }
  r.tactics.assign(cisa_tactics().begin(), cisa_tactics().end());
  r.notes.push_back(
      "Setting log4j2.formatMsgNoLookups=true does not stop Thread Context Map "
      "lookup attacks; upgrade or remove the JndiLookup class as well.");
  return r;
}

/// Flowchart mode walks the triage flow as published: listing checks first,
/// then the patch-level questions, then the formatMsgNoLookups escape hatch.
/// CveTable mode instead intersects the version with the advisory table,
/// which flags releases the flowchart still calls safe.
inline AssessmentVerdict assess(const Asset& asset, AssessMode mode) {
  AssessmentVerdict out;
  out.mode = mode;
  out.remediation = recommend(asset);

  if (mode == AssessMode::Flowchart) {
    const bool listed = asset.on_vulnerable_apps_list || asset.found_by_scanner;
    if (!listed) {
      out.verdict = VerdictClass::LikelyNotVulnerable;
      return out;
    }
    // Unknown versions cannot confirm a patch level, so every patch question
    // takes its "no" edge.
    const auto& v = asset.version;
    if (v && *v >= Log4jVersion{2, 16, 0}) {
      out.verdict = VerdictClass::NotVulnerable;
      return out;
    }
    if (v && *v == Log4jVersion{2, 12, 2}) {
      out.verdict = VerdictClass::NotVulnerable;
      return out;
    }
    if (v && *v >= Log4jVersion{2, 15, 0}) {
      out.verdict = VerdictClass::LikelyNotVulnerable;
      return out;
    }
    out.verdict = asset.format_msg_no_lookups_set ? VerdictClass::LikelyNotVulnerable
                                                  : VerdictClass::Vulnerable;
    return out;
  }

  if (!asset.version)
    throw InsufficientEvidence(asset.name + ": cve-table assessment needs a known version");
  out.applicable_cves = cve_matches(*asset.version);
  if (asset.jndilookup_member_present == false) {
    // With the lookup class stripped the JNDI-substitution advisories no
    // longer apply; the configuration-loading one still does.
    out.applicable_cves.erase("CVE-2021-44228");
    out.applicable_cves.erase("CVE-2021-45046");
  }
  out.verdict =
      out.applicable_cves.empty() ? VerdictClass::NotVulnerable : VerdictClass::Vulnerable;
  return out;
}

}  // namespace shellstop
