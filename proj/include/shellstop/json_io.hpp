#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "shellstop/assess.hpp"
#include "shellstop/detect.hpp"
#include "shellstop/lookup.hpp"
#include "shellstop/scan_tree.hpp"
#include "shellstop/simulate.hpp"
#include "shellstop/zip.hpp"

namespace shellstop {

// Reports use ordered_json so the same inputs always serialize to the same
// bytes; scripts can diff or hash the output.
using Json = nlohmann::ordered_json;

struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// --- enum names -------------------------------------------------------------

inline std::string_view to_label(Verdict v) {
  switch (v) {
    case Verdict::Exploit: return "exploit";
    case Verdict::Suspicious: return "suspicious";
    case Verdict::Benign: return "benign";
  }
  return "?";
}

inline std::string_view to_label(TransformKind k) {
  switch (k) {
    case TransformKind::PercentDecode: return "percent-decode";
    case TransformKind::UnicodeEscapeDecode: return "unicode-escape-decode";
    case TransformKind::LookupCanonicalize: return "lookup-canonicalize";
  }
  return "?";
}

inline std::string_view to_label(Phase p) {
  switch (p) {
    case Phase::P1_ExploitAttempt: return "p1-exploit-attempt";
    case Phase::P2_LdapRequest: return "p2-ldap-request";
    case Phase::P2_PayloadFetched: return "p2-payload-fetched";
    case Phase::P3_Staging: return "p3-staging";
    case Phase::P3_Execution: return "p3-execution";
  }
  return "?";
}

inline std::string_view to_label(PhaseOutcome o) {
  switch (o) {
    case PhaseOutcome::Success: return "success";
    case PhaseOutcome::Blocked: return "blocked";
    case PhaseOutcome::Failed: return "failed";
  }
  return "?";
}

inline std::string_view to_label(Terminal t) {
  switch (t) {
    case Terminal::BlockedAtP1: return "blocked-at-p1";
    case Terminal::NoLookupTriggered: return "no-lookup-triggered";
    case Terminal::LdapUnreachable: return "ldap-unreachable";
    case Terminal::PayloadFailed: return "payload-failed";
    case Terminal::FootholdEstablished: return "foothold-established";
    case Terminal::ObjectiveExecuted: return "objective-executed";
  }
  return "?";
}

inline std::string_view to_label(VerdictClass v) {
  switch (v) {
    case VerdictClass::Vulnerable: return "vulnerable";
    case VerdictClass::LikelyNotVulnerable: return "likely-not-vulnerable";
    case VerdictClass::NotVulnerable: return "not-vulnerable";
  }
  return "?";
}

inline std::string_view to_label(AssessMode m) {
  return m == AssessMode::Flowchart ? "flowchart" : "cve-table";
}

inline std::string_view to_label(JavaMajor j) {
  switch (j) {
    case JavaMajor::Java6: return "6";
    case JavaMajor::Java7: return "7";
    case JavaMajor::Java8Plus: return "8+";
  }
  return "?";
}

inline AssessMode assess_mode_from_label(std::string_view s) {
  if (s == "flowchart") return AssessMode::Flowchart;
  if (s == "cve-table") return AssessMode::CveTable;
  throw FormatError("unknown assessment mode: " + std::string(s));
}

// --- detector ---------------------------------------------------------------

inline Json to_json(const NormalizationTrace& trace) {
  Json steps = Json::array();
  for (const auto& s : trace.steps)
    steps.push_back(Json{{"transform", to_label(s.transform)}, {"before", s.before}, {"after", s.after}});
  return steps;
}

inline Json to_json(const Detection& d) {
  Json j;
  j["verdict"] = to_label(d.verdict);
  j["scheme"] = d.scheme ? Json(*d.scheme) : Json(nullptr);
  j["target_uri"] = d.target_uri ? Json(*d.target_uri) : Json(nullptr);
  j["normalized"] = d.normalized;
  j["matched_rule"] = d.matched_rule;
  j["transforms"] = to_json(d.trace);
  return j;
}

inline Json to_json(const ScanReport& report) {
  Json j;
  j["summary"] = Json{{"exploit", report.summary.exploit},
                      {"suspicious", report.summary.suspicious},
                      {"benign", report.summary.benign},
                      {"total", report.summary.total()}};
  Json findings = Json::array();
  for (const auto& line : report.lines) {
    if (line.detection.verdict == Verdict::Benign) continue;
    Json f = to_json(line.detection);
    Json entry;
    entry["line_no"] = line.line_no;
    for (auto& [k, v] : f.items()) entry[k] = v;
    findings.push_back(std::move(entry));
  }
  j["findings"] = std::move(findings);
  return j;
}

// --- lookup engine ----------------------------------------------------------

inline Json to_json(const EvalEvent& e) {
  if (const auto* j = std::get_if<JndiRequestEvent>(&e))
    return Json{{"type", "jndi-request"},
                {"uri", j->uri},
                {"scheme", j->scheme},
                {"host", j->host},
                {"path", j->path}};
  if (std::holds_alternative<RecursionOverflowEvent>(e)) return Json{{"type", "recursion-overflow"}};
  const auto& u = std::get<UnresolvedLookupEvent>(e);
  return Json{{"type", "unresolved-lookup"}, {"scheme", u.scheme}, {"arg", u.arg}};
}

inline Json to_json(const EvalOutcome& out) {
  Json j;
  j["text"] = out.text;
  Json events = Json::array();
  for (const auto& e : out.events) events.push_back(to_json(e));
  j["events"] = std::move(events);
  j["error"] = out.error ? Json("recursion-overflow") : Json(nullptr);
  return j;
}

// --- simulator --------------------------------------------------------------

inline Json to_json(const AttackTrace& trace) {
  Json j;
  Json events = Json::array();
  for (const auto& e : trace.events)
    events.push_back(Json{{"seq", e.seq},
                          {"phase", to_label(e.phase)},
                          {"outcome", to_label(e.outcome)},
                          {"detail", e.detail}});
  j["events"] = std::move(events);
  j["terminal"] = to_label(trace.terminal);
  return j;
}

inline VersionProfile profile_from_json(const Json& j) {
  if (j.is_string()) return VersionProfile::preset(j.get<std::string>());
  if (!j.is_object()) throw FormatError("victim_profile must be a version string or an object");
  if (!j.contains("version")) throw FormatError("victim_profile needs a version field");
  VersionProfile p = VersionProfile::preset(j.at("version").get<std::string>());
  auto flag = [&](const char* name, bool& field) {
    if (j.contains(name)) field = j.at(name).get<bool>();
  };
  flag("message_lookups_enabled", p.message_lookups_enabled);
  flag("jndi_lookup_present", p.jndi_lookup_present);
  flag("jndi_restricted_to_localhost", p.jndi_restricted_to_localhost);
  flag("recursion_detection", p.recursion_detection);
  flag("format_msg_no_lookups", p.format_msg_no_lookups);
  flag("context_pattern_lookup_enabled", p.context_pattern_lookup_enabled);
  return p;
}

inline ScenarioConfig scenario_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("scenario file must hold a JSON object");
  ScenarioConfig cfg;
  if (!j.contains("victim_profile")) throw FormatError("scenario needs victim_profile");
  cfg.victim_profile = profile_from_json(j.at("victim_profile"));
  if (!j.contains("payload_string")) throw FormatError("scenario needs payload_string");
  cfg.payload_string = j.at("payload_string").get<std::string>();
  if (j.contains("ldap_server_up")) cfg.ldap_server_up = j.at("ldap_server_up").get<bool>();
  if (j.contains("payload_executable"))
    cfg.payload_executable = j.at("payload_executable").get<bool>();
  if (j.contains("detector_inline")) cfg.detector_inline = j.at("detector_inline").get<bool>();
  if (j.contains("attacker_host")) cfg.attacker_host = j.at("attacker_host").get<std::string>();
  if (j.contains("max_retries")) cfg.max_retries = j.at("max_retries").get<int>();
  return cfg;
}

// --- assessor ---------------------------------------------------------------

inline Json to_json(const Remediation& r) {
  Json j;
  j["target"] = to_string(r.upgrade_target);
  j["tactics"] = r.tactics;
  j["notes"] = r.notes;
  return j;
}

inline Json to_json(const Asset& a) {
  Json j;
  j["name"] = a.name;
  j["version"] = a.version ? Json(to_string(*a.version)) : Json(nullptr);
  j["on_vulnerable_apps_list"] = a.on_vulnerable_apps_list;
  j["found_by_scanner"] = a.found_by_scanner;
  j["jndilookup_member_present"] =
      a.jndilookup_member_present ? Json(*a.jndilookup_member_present) : Json(nullptr);
  j["format_msg_no_lookups_set"] = a.format_msg_no_lookups_set;
  j["java_major"] = a.java_major ? Json(to_label(*a.java_major)) : Json(nullptr);
  return j;
}

inline Asset asset_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("asset record must be a JSON object");
  Asset a;
  if (!j.contains("name")) throw FormatError("asset record needs a name");
  a.name = j.at("name").get<std::string>();
  if (j.contains("version") && !j.at("version").is_null())
    a.version = parse_version(j.at("version").get<std::string>());
  if (j.contains("on_vulnerable_apps_list"))
    a.on_vulnerable_apps_list = j.at("on_vulnerable_apps_list").get<bool>();
  if (j.contains("found_by_scanner")) a.found_by_scanner = j.at("found_by_scanner").get<bool>();
  if (j.contains("jndilookup_member_present") && !j.at("jndilookup_member_present").is_null())
    a.jndilookup_member_present = j.at("jndilookup_member_present").get<bool>();
  if (j.contains("format_msg_no_lookups_set"))
    a.format_msg_no_lookups_set = j.at("format_msg_no_lookups_set").get<bool>();
  if (j.contains("java_major") && !j.at("java_major").is_null()) {
    const Json& jm = j.at("java_major");
    if (jm.is_number_integer()) {
      switch (jm.get<int>()) {
        case 6: a.java_major = JavaMajor::Java6; break;
        case 7: a.java_major = JavaMajor::Java7; break;
        case 8: a.java_major = JavaMajor::Java8Plus; break;
        default: throw FormatError(a.name + ": java_major must be 6, 7 or 8+");
      }
    } else {
      const std::string s = jm.get<std::string>();
      if (s == "6")
        a.java_major = JavaMajor::Java6;
      else if (s == "7")
        a.java_major = JavaMajor::Java7;
      else if (s == "8" || s == "8+")
        a.java_major = JavaMajor::Java8Plus;
      else
        throw FormatError(a.name + ": java_major must be 6, 7 or 8+");
    }
  }
  return a;
}

inline std::vector<Asset> inventory_from_json(const Json& j) {
  const Json* records = nullptr;
  if (j.is_array()) {
    records = &j;
  } else if (j.is_object() && j.contains("assets") && j.at("assets").is_array()) {
    records = &j.at("assets");
  } else {
    throw FormatError("inventory must be an array of assets or {\"assets\": [...]}");
  }
  std::vector<Asset> out;
  for (const auto& rec : *records) out.push_back(asset_from_json(rec));
  return out;
}

inline Json to_json(const Asset& asset, const AssessmentVerdict& verdict) {
  Json j;
  j["name"] = asset.name;
  j["verdict"] = to_label(verdict.verdict);
  j["mode"] = to_label(verdict.mode);
  j["cves"] = verdict.applicable_cves;
  j["remediation"] = to_json(verdict.remediation);
  return j;
}

inline Json to_json(const ScanTreeReport& report) {
  Json j;
  Json assets = Json::array();
  for (const auto& a : report.assets) {
    Json entry = to_json(a);
    if (a.version) {
      Asset effective = a;
      AssessmentVerdict v = assess(effective, AssessMode::CveTable);
      entry["cves"] = v.applicable_cves;
      entry["verdict"] = to_label(v.verdict);
    } else {
      entry["cves"] = Json::array();
      entry["verdict"] = nullptr;
    }
    assets.push_back(std::move(entry));
  }
  j["assets"] = std::move(assets);
  j["warnings"] = report.warnings;
  return j;
}

inline Json to_json(const StripReport& report) {
  Json j;
  j["removed"] = report.removed;
  j["removed_count"] = report.removed.size();
  j["kept_count"] = report.kept.size();
  j["member_was_absent"] = report.member_was_absent;
  return j;
}

}  // namespace shellstop
