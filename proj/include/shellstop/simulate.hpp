#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shellstop/detect.hpp"
#include "shellstop/lookup.hpp"

namespace shellstop {

// ---------------------------------------------------------------------------
// Deterministic three-phase attack simulation between a victim application
// and an attacker-run directory service. Nothing is fetched or executed:
// "payloads" are declarative action lists interpreted into marker files
// inside a caller-supplied sandbox directory, and no sockets are opened.
// ---------------------------------------------------------------------------

enum class Phase { P1_ExploitAttempt, P2_LdapRequest, P2_PayloadFetched, P3_Staging, P3_Execution };

enum class PhaseOutcome { Success, Blocked, Failed };

struct PhaseEvent {
  Phase phase;
  PhaseOutcome outcome;
  std::string detail;
  int seq = 0;  // strictly increasing within a trace
};

enum class Terminal {
  BlockedAtP1,
  NoLookupTriggered,
  LdapUnreachable,
  PayloadFailed,
  FootholdEstablished,
  ObjectiveExecuted,
};

struct AttackTrace {
  std::vector<PhaseEvent> events;
  Terminal terminal = Terminal::NoLookupTriggered;
};

enum class PayloadAction { WriteMarkerFile, OpenReverseShellSimulated };

struct PayloadReference {
  std::string path = "/";
  bool executable = true;
  std::vector<PayloadAction> actions;
};

struct Unreachable {};

using DirectoryResponse = std::variant<PayloadReference, Unreachable>;

/// The attacker-side answer to one directory query: a reference to a benign
/// marker script, or nothing when the stage host is down.
inline DirectoryResponse serve_reference(std::string_view path, bool up, bool executable) {
  if (!up) return Unreachable{};
  PayloadReference ref;
  ref.path = path.empty() ? "/" : std::string(path);
  ref.executable = executable;
  ref.actions = {PayloadAction::WriteMarkerFile};
  return ref;
}

struct DirectoryRequest {
  std::string uri;
  std::string path;
};

/// Request/response contract between the two simulated actors. The bundled
/// implementation answers in-process; the interface is the seam for other
/// transports.
class DirectoryChannel {
 public:
  virtual ~DirectoryChannel() = default;
  virtual DirectoryResponse exchange(const DirectoryRequest& request) = 0;
};

class InProcessDirectory final : public DirectoryChannel {
 public:
  InProcessDirectory(bool up, bool executable) : up_(up), executable_(executable) {}
  DirectoryResponse exchange(const DirectoryRequest& request) override {
    return serve_reference(request.path, up_, executable_);
  }

 private:
  bool up_;
  bool executable_;
};

struct ScenarioConfig {
  VersionProfile victim_profile;
  std::string payload_string;
  bool ldap_server_up = true;
  bool payload_executable = true;
  bool detector_inline = false;
  std::string attacker_host = "exampleattacker.com";
  int max_retries = 0;  // failed fetches are recorded as retryable, never auto-retried past this
  std::optional<std::filesystem::path> sandbox_dir;
};

struct ScenarioError : std::runtime_error {
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

struct InconsistentTrace : std::runtime_error {
  explicit InconsistentTrace(const std::string& what) : std::runtime_error(what) {}
};

struct VictimResult {
  bool blocked = false;
  std::vector<EvalEvent> events;
  std::optional<EvalError> error;
};

/// What the victim does with one logged request field: an inline detector may
/// drop it, otherwise it is logged (message-source evaluation) and, when the
/// deployment routes context values through its pattern layout, the stored
/// value is expanded a second time through that layout.
inline VictimResult victim_handle(const std::string& input, const VersionProfile& profile,
                                  const std::optional<RuleSet>& inline_rules) {
  VictimResult result;
  if (inline_rules && detect(input, *inline_rules).verdict == Verdict::Exploit) {
    result.blocked = true;
    return result;
  }
  EvalContext ctx = EvalContext::with_defaults(profile);
  ctx.thread_context_map["userAgent"] = input;

  EvalOutcome logged = evaluate(input, ctx, EvalSource::LogMessage);
  result.events = logged.events;
  result.error = logged.error;

  if (profile.context_pattern_lookup_enabled && !result.error) {
    EvalOutcome layout = evaluate("${ctx:userAgent}", ctx, EvalSource::PatternLayout);
    result.events.insert(result.events.end(), layout.events.begin(), layout.events.end());
    if (layout.error) result.error = layout.error;
  }
  return result;
}

namespace detail {

inline bool write_marker(const std::filesystem::path& file, std::string_view content) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) return false;
  out << content << '\n';
  return static_cast<bool>(out);
}

}  // namespace detail

/// Recomputes the terminal state a well-formed event list implies. Throws
/// InconsistentTrace on ordering violations or impossible combinations.
inline Terminal classify_events(const std::vector<PhaseEvent>& events) {
  if (events.empty()) throw InconsistentTrace("empty event list");

  int last_seq = 0;
  Phase last_phase = Phase::P1_ExploitAttempt;
  bool fetched_ok = false;
  for (const auto& e : events) {
    if (e.seq <= last_seq) throw InconsistentTrace("event sequence numbers must increase");
    last_seq = e.seq;
    if (static_cast<int>(e.phase) < static_cast<int>(last_phase))
      throw InconsistentTrace("phases out of order");
    last_phase = e.phase;
    if ((e.phase == Phase::P3_Staging || e.phase == Phase::P3_Execution) && !fetched_ok)
      throw InconsistentTrace("phase 3 requires a fetched payload");
    if (e.phase == Phase::P2_PayloadFetched && e.outcome == PhaseOutcome::Success)
      fetched_ok = true;
  }

  auto find = [&](Phase p, PhaseOutcome o) {
    for (const auto& e : events)
      if (e.phase == p && e.outcome == o) return true;
    return false;
  };

  if (find(Phase::P1_ExploitAttempt, PhaseOutcome::Blocked)) {
    if (events.size() != 1) throw InconsistentTrace("a blocked attempt ends the trace");
    return Terminal::BlockedAtP1;
  }
  if (!find(Phase::P1_ExploitAttempt, PhaseOutcome::Success))
    throw InconsistentTrace("trace must start with an exploit attempt");
  if (find(Phase::P3_Execution, PhaseOutcome::Success)) return Terminal::ObjectiveExecuted;
  if (find(Phase::P3_Execution, PhaseOutcome::Failed)) return Terminal::FootholdEstablished;
  if (find(Phase::P3_Staging, PhaseOutcome::Failed)) return Terminal::PayloadFailed;
  if (find(Phase::P3_Staging, PhaseOutcome::Success)) return Terminal::FootholdEstablished;
  if (find(Phase::P2_PayloadFetched, PhaseOutcome::Failed)) return Terminal::PayloadFailed;
  if (find(Phase::P2_LdapRequest, PhaseOutcome::Failed)) return Terminal::LdapUnreachable;
  if (fetched_ok) throw InconsistentTrace("payload fetched but phase 3 never ran");
  if (find(Phase::P2_LdapRequest, PhaseOutcome::Success))
    throw InconsistentTrace("directory answered but no fetch was recorded");
  return Terminal::NoLookupTriggered;
}

/// Consistency check: recomputes the terminal from the events and compares
/// it with the stored one.
inline Terminal classify_trace(const AttackTrace& trace) {
  const Terminal recomputed = classify_events(trace.events);
  if (recomputed != trace.terminal)
    throw InconsistentTrace("stored terminal disagrees with event history");
  return recomputed;
}

inline AttackTrace run_scenario(const ScenarioConfig& cfg, DirectoryChannel& directory) {
  if (cfg.payload_string.empty()) throw ScenarioError("payload_string must not be empty");

  AttackTrace trace;
  int seq = 0;
  auto push = [&](Phase p, PhaseOutcome o, std::string detail) {
    trace.events.push_back({p, o, std::move(detail), ++seq});
  };

  const std::optional<RuleSet> rules =
      cfg.detector_inline ? std::optional<RuleSet>(RuleSet::defaults()) : std::nullopt;
  const VictimResult vr = victim_handle(cfg.payload_string, cfg.victim_profile, rules);

  if (vr.blocked) {
    push(Phase::P1_ExploitAttempt, PhaseOutcome::Blocked,
         "inline detector flagged the payload; request dropped before logging");
    trace.terminal = Terminal::BlockedAtP1;
    return trace;
  }

  const JndiRequestEvent* jndi = nullptr;
  for (const auto& e : vr.events)
    if (const auto* j = std::get_if<JndiRequestEvent>(&e)) {
      jndi = j;
      break;
    }

  if (!jndi) {
    std::string detail = "payload logged by victim; no JNDI request emitted";
    if (vr.error == EvalError::RecursionOverflow)
      detail = "payload logged by victim; lookup recursion overflow (simulated denial of service)";
    push(Phase::P1_ExploitAttempt, PhaseOutcome::Success, std::move(detail));
    trace.terminal = Terminal::NoLookupTriggered;
    return trace;
  }

  push(Phase::P1_ExploitAttempt, PhaseOutcome::Success,
       "payload logged by victim; JNDI request for " + jndi->uri);

  const DirectoryResponse response = directory.exchange({jndi->uri, jndi->path});
  if (std::holds_alternative<Unreachable>(response)) {
    push(Phase::P2_LdapRequest, PhaseOutcome::Failed,
         "directory service unreachable for " + jndi->uri);
    trace.terminal = Terminal::LdapUnreachable;
    return trace;
  }
  const auto& ref = std::get<PayloadReference>(response);
  push(Phase::P2_LdapRequest, PhaseOutcome::Success,
       "directory service on " + cfg.attacker_host + " returned payload reference " + ref.path);

  if (!ref.executable) {
    push(Phase::P2_PayloadFetched, PhaseOutcome::Failed,
         "payload fetched but victim lacks components to run it; retryable=true");
    for (int attempt = 1; attempt <= cfg.max_retries; ++attempt)
      push(Phase::P2_PayloadFetched, PhaseOutcome::Failed,
           "retry " + std::to_string(attempt) + " failed for the same reason; retryable=true");
    trace.terminal = Terminal::PayloadFailed;
    return trace;
  }
  push(Phase::P2_PayloadFetched, PhaseOutcome::Success,
       "payload reference fetched; marker script ready");

  const bool sandboxed = cfg.sandbox_dir.has_value();
  bool staged = true;
  std::string staging_where = "(virtual, no sandbox directory)";
  if (sandboxed) {
    const auto marker = *cfg.sandbox_dir / "staging_reverse_shell.marker";
    staged = detail::write_marker(marker, "simulated reverse shell endpoint; no channel opened");
    staging_where = marker.string();
  }
  if (!staged) {
    push(Phase::P3_Staging, PhaseOutcome::Failed, "could not write staging marker " + staging_where);
    trace.terminal = Terminal::PayloadFailed;
    return trace;
  }
  push(Phase::P3_Staging, PhaseOutcome::Success, "simulated reverse shell marker " + staging_where);

  bool executed = true;
  std::string exec_where = "(virtual, no sandbox directory)";
  for (const PayloadAction action : ref.actions) {
    if (!sandboxed) continue;
    const auto marker = action == PayloadAction::WriteMarkerFile
                            ? *cfg.sandbox_dir / "objective.marker"
                            : *cfg.sandbox_dir / "reverse_shell.marker";
    if (!detail::write_marker(marker, "objective reached (simulated)")) {
      executed = false;
      exec_where = marker.string();
      break;
    }
    exec_where = marker.string();
  }
  if (!executed) {
    push(Phase::P3_Execution, PhaseOutcome::Failed, "could not write marker " + exec_where);
    trace.terminal = Terminal::FootholdEstablished;
    return trace;
  }
  push(Phase::P3_Execution, PhaseOutcome::Success, "objective marker " + exec_where);
  trace.terminal = Terminal::ObjectiveExecuted;
  return trace;
}

inline AttackTrace run_scenario(const ScenarioConfig& cfg) {
  InProcessDirectory directory(cfg.ldap_server_up, cfg.payload_executable);
  return run_scenario(cfg, directory);
}

}  // namespace shellstop
