#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shellstop/lookup.hpp"

namespace shellstop {

enum class TransformKind { PercentDecode, UnicodeEscapeDecode, LookupCanonicalize };

struct TransformStep {
  TransformKind transform;
  std::string before;
  std::string after;
};

struct NormalizationTrace {
  std::vector<TransformStep> steps;
};

/// Decoding stops after this many recorded layers even without a fixpoint, so
/// crafted decode bombs cannot spin the scanner.
inline constexpr std::size_t kMaxDecodeLayers = 8;

namespace detail {

inline int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline void utf8_append(std::string& out, unsigned cp) {
  if (cp <= 0x7F) {
    out += static_cast<char>(cp);
  } else if (cp <= 0x7FF) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace detail

/// One lenient pass of %XX decoding; malformed sequences pass through.
inline std::string percent_decode_once(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const int hi = detail::hex_value(s[i + 1]);
      const int lo = detail::hex_value(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>(hi * 16 + lo);
        i += 3;
        continue;
      }
    }
    out += s[i];
    ++i;
  }
  return out;
}

/// One lenient pass of \uXXXX decoding; code points are emitted as UTF-8.
inline std::string unicode_escape_decode_once(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '\\' && i + 5 < s.size() && s[i + 1] == 'u') {
      const int a = detail::hex_value(s[i + 2]);
      const int b = detail::hex_value(s[i + 3]);
      const int c = detail::hex_value(s[i + 4]);
      const int d = detail::hex_value(s[i + 5]);
      if (a >= 0 && b >= 0 && c >= 0 && d >= 0) {
        detail::utf8_append(out, static_cast<unsigned>(a << 12 | b << 8 | c << 4 | d));
        i += 6;
        continue;
      }
    }
    out += s[i];
    ++i;
  }
  return out;
}

/// Alternates percent and \uXXXX decoding until neither changes the text or
/// the layer cap is hit. Each applied layer is recorded in the trace.
inline std::pair<std::string, NormalizationTrace> decode_layers(std::string_view raw) {
  std::string cur(raw);
  NormalizationTrace trace;
  while (trace.steps.size() < kMaxDecodeLayers) {
    bool changed = false;
    std::string p = percent_decode_once(cur);
    if (p != cur) {
      trace.steps.push_back({TransformKind::PercentDecode, cur, p});
      cur = std::move(p);
      changed = true;
    }
    if (trace.steps.size() >= kMaxDecodeLayers) break;
    std::string u = unicode_escape_decode_once(cur);
    if (u != cur) {
      trace.steps.push_back({TransformKind::UnicodeEscapeDecode, cur, u});
      cur = std::move(u);
      changed = true;
    }
    if (!changed) break;
  }
  return {std::move(cur), std::move(trace)};
}

/// Flattens obfuscation lookups so the exploit shape becomes visible: lower
/// and upper are applied, defaults of schemes that cannot resolve at scan
/// time are taken, and jndi is kept inert (never swallowed by its default)
/// with its body flattened in place.
inline std::string canonicalize(std::string_view text) {
  EvalContext ctx;
  ctx.profile.message_lookups_enabled = true;
  ctx.profile.recursion_detection = true;  // truncates cleanly; stays total
  ctx.resolvers["lower"] = [](const std::string& arg, const std::string&, EvalContext&, EventLog&) {
    return ResolveResult::resolved(detail::ascii_lower(arg));
  };
  ctx.resolvers["upper"] = [](const std::string& arg, const std::string&, EvalContext&, EventLog&) {
    return ResolveResult::resolved(detail::ascii_upper(arg));
  };
  ctx.inert_schemes = {"jndi"};
  ctx.unresolved_style = UnresolvedStyle::Flattened;
  return evaluate(text, ctx, EvalSource::PatternLayout).text;
}

}  // namespace shellstop
