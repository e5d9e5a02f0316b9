#pragma once

#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shellstop/normalize.hpp"

namespace shellstop {

enum class Verdict { Exploit, Suspicious, Benign };

struct Detection {
  Verdict verdict = Verdict::Benign;
  std::optional<std::string> scheme;      // recognized jndi sub-scheme
  std::optional<std::string> target_uri;  // as written in the payload
  std::string normalized;
  NormalizationTrace trace;
  std::string matched_rule;
};

struct RuleSet {
  // Literal substrings an early firewall rule would look for.
  std::vector<std::string> naive_rules = {"${jndi:ldap", "${jndi:dns", "${jndi:rmi"};
  // Sub-schemes recognized after normalization, matched case-insensitively.
  std::vector<std::string> canonical_rules = {"ldap", "ldaps", "rmi",  "dns", "nis",
                                              "nds",  "corba", "iiop", "http"};

  static RuleSet defaults() { return RuleSet{}; }
};

namespace detail {

// The transposed token shows up in circulated payloads built from nested
// case lookups; treat it as the same indicator.
inline bool is_jndi_token(std::string_view folded) {
  return folded == "jndi" || folded == "jdni";
}

struct JndiHit {
  bool exploit = false;
  std::string scheme;
  std::string target;
  std::string rule;
};

inline bool scheme_recognized(const RuleSet& rules, std::string_view folded) {
  for (const auto& s : rules.canonical_rules)
    if (ascii_lower(s) == folded) return true;
  return false;
}

inline void collect_jndi_hits(const LookupTemplate& t, const RuleSet& rules,
                              std::vector<JndiHit>& hits) {
  for (const Node& n : t.nodes) {
    const auto* lk = std::get_if<Lookup>(&n.value);
    if (!lk) continue;
    const std::string body = render(lk->body);
    const auto colon = body.find(':');
    const std::string token = ascii_lower(colon == std::string::npos ? body : body.substr(0, colon));
    if (is_jndi_token(token)) {
      const std::string arg = colon == std::string::npos ? std::string() : body.substr(colon + 1);
      auto uri = parse_jndi_uri(arg);
      if (uri && scheme_recognized(rules, ascii_lower(uri->scheme))) {
        hits.push_back({true, ascii_lower(uri->scheme), arg, "jndi-uri:" + ascii_lower(uri->scheme)});
      } else {
        hits.push_back({false, {}, {}, colon == std::string::npos ? "jndi-bare" : "jndi-opaque-target"});
      }
    }
    collect_jndi_hits(lk->body, rules, hits);
    if (lk->default_value) collect_jndi_hits(*lk->default_value, rules, hits);
  }
}

inline bool has_jndi_fragment(std::string_view text) {
  const std::string folded = ascii_lower(text);
  return folded.find("${jndi") != std::string::npos || folded.find("${jdni") != std::string::npos;
}

}  // namespace detail

/// Plain substring containment against the naive rule list. Deliberately
/// weak: it exists to show what single-layer obfuscation walks past.
inline bool naive_match(std::string_view line, const RuleSet& rules) {
  for (const auto& r : rules.naive_rules)
    if (line.find(r) != std::string_view::npos) return true;
  return false;
}

/// Decode, canonicalize, then look for a jndi lookup. Exploit needs a
/// recognized sub-scheme with a host; a jndi lookup without a usable target
/// is Suspicious, as is a mangled fragment that never parses as a lookup.
inline Detection detect(std::string_view line, const RuleSet& rules) {
  Detection d;
  auto [decoded, trace] = decode_layers(line);
  d.trace = std::move(trace);
  std::string canonical = canonicalize(decoded);
  if (canonical != decoded)
    d.trace.steps.push_back({TransformKind::LookupCanonicalize, decoded, canonical});
  d.normalized = canonical;

  std::vector<detail::JndiHit> hits;
  detail::collect_jndi_hits(parse(canonical), rules, hits);
  if (decoded != canonical) detail::collect_jndi_hits(parse(decoded), rules, hits);

  for (const auto& h : hits) {
    if (!h.exploit) continue;
    d.verdict = Verdict::Exploit;
    d.scheme = h.scheme;
    d.target_uri = h.target;
    d.matched_rule = h.rule;
    return d;
  }
  if (!hits.empty()) {
    d.verdict = Verdict::Suspicious;
    d.matched_rule = hits.front().rule;
    return d;
  }
  if (detail::has_jndi_fragment(canonical) || detail::has_jndi_fragment(decoded)) {
    d.verdict = Verdict::Suspicious;
    d.matched_rule = "jndi-fragment";
    return d;
  }
  d.verdict = Verdict::Benign;
  return d;
}

struct ScanSummary {
  std::size_t exploit = 0;
  std::size_t suspicious = 0;
  std::size_t benign = 0;
  std::size_t total() const { return exploit + suspicious + benign; }
};

struct LineFinding {
  std::size_t line_no = 0;  // 1-based
  Detection detection;
};

struct ScanReport {
  ScanSummary summary;
  std::vector<LineFinding> lines;
};

struct ScanError : std::runtime_error {
  std::size_t line_no;
  ScanError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_no(line) {}
};

/// Scans one record per line, in input order. Trailing \r is stripped so
/// CRLF logs scan the same as LF logs.
inline ScanReport scan_stream(std::istream& in, const RuleSet& rules) {
  ScanReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    LineFinding f{line_no, detect(line, rules)};
    switch (f.detection.verdict) {
      case Verdict::Exploit: ++report.summary.exploit; break;
      case Verdict::Suspicious: ++report.summary.suspicious; break;
      case Verdict::Benign: ++report.summary.benign; break;
    }
    report.lines.push_back(std::move(f));
  }
  if (in.bad()) throw ScanError(line_no + 1, "read failure");
  return report;
}

}  // namespace shellstop
