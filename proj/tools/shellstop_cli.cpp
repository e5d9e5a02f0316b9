// shellstop: Log4Shell lab toolkit CLI.
//
// Exit codes are a stable contract for pipelines:
//   0  success, nothing found
//   1  runtime error
//   2  usage error
//   3  exploits detected / vulnerable assets / simulated attack succeeded

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shellstop/json_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFindings = 3;

using shellstop::Json;

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Json j;
  in >> j;
  return j;
}

std::map<std::string, std::string> parse_kv_pairs(const std::vector<std::string>& pairs,
                                                  const char* flag) {
  std::map<std::string, std::string> out;
  for (const auto& p : pairs) {
    const auto eq = p.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError(std::string(flag) + " expects key=value, got '" + p + "'");
    out[p.substr(0, eq)] = p.substr(eq + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

int run_detect(const std::string& input, bool pretty) {
  const shellstop::Detection d = shellstop::detect(input, shellstop::RuleSet::defaults());
  if (pretty) {
    std::cout << "verdict:  " << shellstop::to_label(d.verdict) << "\n";
    if (d.scheme) std::cout << "scheme:   " << *d.scheme << "\n";
    if (d.target_uri) std::cout << "target:   " << *d.target_uri << "\n";
    std::cout << "rule:     " << (d.matched_rule.empty() ? "-" : d.matched_rule) << "\n";
    std::cout << "normal:   " << d.normalized << "\n";
    for (const auto& s : d.trace.steps)
      std::cout << "  " << shellstop::to_label(s.transform) << ": " << s.after << "\n";
  } else {
    print_json(shellstop::to_json(d));
  }
  return d.verdict == shellstop::Verdict::Exploit ? kExitFindings : kExitOk;
}

// ---------------------------------------------------------------------------
// scan-logs
// ---------------------------------------------------------------------------

shellstop::ScanReport scan_jsonl(std::istream& in, const std::string& field,
                                 const shellstop::RuleSet& rules) {
  shellstop::ScanReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw shellstop::ScanError(line_no, std::string("invalid JSON record: ") + e.what());
    }
    if (!record.contains(field) || !record.at(field).is_string())
      throw shellstop::ScanError(line_no, "record has no string field '" + field + "'");
    shellstop::LineFinding f{line_no,
                             shellstop::detect(record.at(field).get<std::string>(), rules)};
    switch (f.detection.verdict) {
      case shellstop::Verdict::Exploit: ++report.summary.exploit; break;
      case shellstop::Verdict::Suspicious: ++report.summary.suspicious; break;
      case shellstop::Verdict::Benign: ++report.summary.benign; break;
    }
    report.lines.push_back(std::move(f));
  }
  if (in.bad()) throw shellstop::ScanError(line_no + 1, "read failure");
  return report;
}

int run_scan_logs(const std::string& path, bool jsonl, const std::string& field, bool pretty) {
  const auto rules = shellstop::RuleSet::defaults();
  shellstop::ScanReport report;
  auto scan = [&](std::istream& in) {
    return jsonl ? scan_jsonl(in, field, rules) : shellstop::scan_stream(in, rules);
  };
  if (path == "-") {
    report = scan(std::cin);
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    report = scan(in);
  }
  if (pretty) {
    std::cout << "scanned " << report.summary.total() << " lines: " << report.summary.exploit
              << " exploit, " << report.summary.suspicious << " suspicious, "
              << report.summary.benign << " benign\n";
    for (const auto& line : report.lines) {
      if (line.detection.verdict == shellstop::Verdict::Benign) continue;
      std::cout << "  line " << line.line_no << ": "
                << shellstop::to_label(line.detection.verdict);
      if (line.detection.target_uri) std::cout << " -> " << *line.detection.target_uri;
      std::cout << "\n";
    }
  } else {
    print_json(shellstop::to_json(report));
  }
  return report.summary.exploit > 0 ? kExitFindings : kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int run_simulate(const std::string& scenario_path, const std::string& sandbox, bool pretty) {
  shellstop::ScenarioConfig cfg = shellstop::scenario_from_json(load_json_file(scenario_path));
  std::string sandbox_dir = sandbox;
  if (sandbox_dir.empty()) {
    if (const char* env = std::getenv("SHELLSTOP_SANDBOX")) sandbox_dir = env;
  }
  if (!sandbox_dir.empty()) {
    std::filesystem::create_directories(sandbox_dir);
    cfg.sandbox_dir = std::filesystem::path(sandbox_dir);
  }
  const shellstop::AttackTrace trace = shellstop::run_scenario(cfg);
  if (pretty) {
    for (const auto& e : trace.events)
      std::cout << e.seq << ". " << shellstop::to_label(e.phase) << " ["
                << shellstop::to_label(e.outcome) << "] " << e.detail << "\n";
    std::cout << "terminal: " << shellstop::to_label(trace.terminal) << "\n";
  } else {
    print_json(shellstop::to_json(trace));
  }
  const bool attack_succeeded = trace.terminal == shellstop::Terminal::FootholdEstablished ||
                                trace.terminal == shellstop::Terminal::ObjectiveExecuted;
  return attack_succeeded ? kExitFindings : kExitOk;
}

// ---------------------------------------------------------------------------
// assess
// ---------------------------------------------------------------------------

int run_assess(const std::string& inventory_path, const std::string& mode_label, bool pretty) {
  const shellstop::AssessMode mode = shellstop::assess_mode_from_label(mode_label);
  const std::vector<shellstop::Asset> assets =
      shellstop::inventory_from_json(load_json_file(inventory_path));
  Json out;
  Json records = Json::array();
  bool any_vulnerable = false;
  bool any_error = false;
  for (const auto& asset : assets) {
    try {
      const shellstop::AssessmentVerdict verdict = shellstop::assess(asset, mode);
      any_vulnerable |= verdict.verdict == shellstop::VerdictClass::Vulnerable;
      records.push_back(shellstop::to_json(asset, verdict));
    } catch (const shellstop::InsufficientEvidence& e) {
      any_error = true;
      Json rec;
      rec["name"] = asset.name;
      rec["error"] = std::string("insufficient evidence: ") + e.what();
      records.push_back(std::move(rec));
    }
  }
  out["assets"] = std::move(records);
  if (pretty) {
    for (const auto& rec : out["assets"]) {
      std::cout << rec.at("name").get<std::string>() << ": ";
      if (rec.contains("error"))
        std::cout << rec.at("error").get<std::string>() << "\n";
      else
        std::cout << rec.at("verdict").get<std::string>() << " (" << rec.at("cves").size()
                  << " CVEs, upgrade to "
                  << rec.at("remediation").at("target").get<std::string>() << ")\n";
    }
  } else {
    print_json(out);
  }
  if (any_error) return kExitRuntime;
  return any_vulnerable ? kExitFindings : kExitOk;
}

// ---------------------------------------------------------------------------
// scan-tree
// ---------------------------------------------------------------------------

int run_scan_tree(const std::string& root, bool pretty) {
  if (!std::filesystem::is_directory(root))
    throw std::runtime_error(root + " is not a readable directory");
  const shellstop::ScanTreeReport report = shellstop::scan_tree(root);
  const Json j = shellstop::to_json(report);
  if (pretty) {
    for (const auto& a : j.at("assets")) {
      std::cout << a.at("name").get<std::string>() << ": version "
                << (a.at("version").is_null() ? "unknown" : a.at("version").get<std::string>())
                << ", " << a.at("cves").size() << " CVEs\n";
    }
    for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
  } else {
    print_json(j);
  }
  for (const auto& a : j.at("assets"))
    if (!a.at("verdict").is_null() && a.at("verdict").get<std::string>() == "vulnerable")
      return kExitFindings;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// strip-jndi
// ---------------------------------------------------------------------------

int run_strip(const std::string& jar, const std::string& output, const std::string& member,
              bool ok_if_absent, bool pretty) {
  const shellstop::StripReport report =
      shellstop::strip_member(jar, member, output, ok_if_absent);
  if (pretty) {
    std::cout << "removed " << report.removed.size() << " member(s), kept "
              << report.kept.size() << "\n";
    for (const auto& r : report.removed) std::cout << "  - " << r << "\n";
  } else {
    print_json(shellstop::to_json(report));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int run_eval(const std::string& template_text, const std::string& profile_version,
             const std::string& source_label, const std::vector<std::string>& ctx_pairs,
             const std::vector<std::string>& env_pairs, std::int64_t epoch, int limit,
             bool pretty) {
  shellstop::EvalContext ctx =
      shellstop::EvalContext::with_defaults(shellstop::VersionProfile::preset(profile_version));
  ctx.thread_context_map = parse_kv_pairs(ctx_pairs, "--ctx");
  ctx.environment = parse_kv_pairs(env_pairs, "--env");
  ctx.clock_epoch_seconds = epoch;
  ctx.recursion_limit = limit;
  const shellstop::EvalSource source = source_label == "pattern-layout"
                                           ? shellstop::EvalSource::PatternLayout
                                           : shellstop::EvalSource::LogMessage;
  const shellstop::EvalOutcome outcome = shellstop::evaluate(template_text, ctx, source);
  if (pretty) {
    std::cout << "text: " << outcome.text << "\n";
    for (const auto& e : outcome.events)
      std::cout << "  event: " << shellstop::to_json(e).dump() << "\n";
    if (outcome.error) std::cout << "error: recursion-overflow\n";
  } else {
    print_json(shellstop::to_json(outcome));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Log4Shell laboratory: exploit-string detection, attack simulation, "
               "vulnerability triage and archive remediation"};
  app.require_subcommand(1);
  app.fallthrough();
  bool pretty = false;
  app.add_flag("--pretty,!--json", pretty,
               "human-readable output instead of JSON (--json is the default)");

  std::string detect_input;
  auto* detect_cmd = app.add_subcommand("detect", "classify one string");
  detect_cmd->add_option("input", detect_input, "string to classify")->required();

  std::string scan_path = "-";
  bool scan_jsonl_flag = false;
  std::string scan_field = "message";
  auto* scan_cmd = app.add_subcommand("scan-logs", "scan a log file ('-' for stdin)");
  scan_cmd->add_option("file", scan_path, "log file, one record per line")->required();
  scan_cmd->add_flag("--jsonl", scan_jsonl_flag, "records are JSON lines");
  scan_cmd->add_option("--field", scan_field, "message field for --jsonl (default: message)");

  std::string scenario_path;
  std::string sandbox;
  auto* sim_cmd = app.add_subcommand("simulate", "run an attack scenario file");
  sim_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
  sim_cmd->add_option("--sandbox", sandbox,
                      "marker directory (default: $SHELLSTOP_SANDBOX if set)");

  std::string inventory_path;
  std::string mode_label = "cve-table";
  auto* assess_cmd = app.add_subcommand("assess", "assess an asset inventory");
  assess_cmd->add_option("--inventory", inventory_path, "inventory JSON file")->required();
  assess_cmd->add_option("--mode", mode_label, "flowchart or cve-table (default)")
      ->check(CLI::IsMember({"flowchart", "cve-table"}));

  std::string tree_root;
  auto* tree_cmd = app.add_subcommand("scan-tree", "find log4j-core archives under a directory");
  tree_cmd->add_option("dir", tree_root, "directory to walk")->required();

  std::string strip_jar, strip_out;
  std::string strip_target(shellstop::kJndiLookupMember);
  bool ok_if_absent = false;
  auto* strip_cmd = app.add_subcommand("strip-jndi", "remove the JndiLookup class from a jar");
  strip_cmd->add_option("jar", strip_jar, "input archive")->required();
  strip_cmd->add_option("-o,--output", strip_out, "output archive")->required();
  strip_cmd->add_option("--member", strip_target, "member to remove");
  strip_cmd->add_flag("--ok-if-absent", ok_if_absent, "succeed when the member is missing");

  std::string eval_template, eval_profile, eval_source = "log-message";
  std::vector<std::string> eval_ctx, eval_env;
  std::int64_t eval_epoch = 1639008000;
  int eval_limit = 64;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a lookup template (debugging aid)");
  eval_cmd->add_option("template", eval_template, "template text")->required();
  eval_cmd->add_option("--profile", eval_profile, "log4j version, e.g. 2.14.1")->required();
  eval_cmd->add_option("--source", eval_source, "log-message (default) or pattern-layout")
      ->check(CLI::IsMember({"log-message", "pattern-layout"}));
  eval_cmd->add_option("--ctx", eval_ctx, "thread context entry key=value")->take_all();
  eval_cmd->add_option("--env", eval_env, "environment entry key=value")->take_all();
  eval_cmd->add_option("--epoch", eval_epoch, "clock for ${date:...} (unix seconds)");
  eval_cmd->add_option("--limit", eval_limit, "recursion limit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*detect_cmd) return run_detect(detect_input, pretty);
    if (*scan_cmd) return run_scan_logs(scan_path, scan_jsonl_flag, scan_field, pretty);
    if (*sim_cmd) return run_simulate(scenario_path, sandbox, pretty);
    if (*assess_cmd) return run_assess(inventory_path, mode_label, pretty);
    if (*tree_cmd) return run_scan_tree(tree_root, pretty);
    if (*strip_cmd) return run_strip(strip_jar, strip_out, strip_target, ok_if_absent, pretty);
    if (*eval_cmd)
      return run_eval(eval_template, eval_profile, eval_source, eval_ctx, eval_env, eval_epoch,
                      eval_limit, pretty);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
