#pragma once

#include <algorithm>
#include <cstdint>
#include <ctime>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shellstop/profile.hpp"

namespace shellstop {

// ---------------------------------------------------------------------------
// Template AST
//
// The grammar is deliberately small: "${" opens a lookup, the matching "}"
// closes it (openers nest), and the first top-level ":-" inside a lookup
// splits the body from a default value. There is no escaping. Parsing is
// total: an unterminated "${" becomes a literal of its raw text.
// ---------------------------------------------------------------------------

struct Literal {
  std::string text;
};

struct Node;

struct LookupTemplate {
  std::vector<Node> nodes;
};

struct Lookup {
  LookupTemplate body;
  std::optional<LookupTemplate> default_value;
};

struct Node {
  std::variant<Literal, Lookup> value;
};

namespace detail {

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
  return out;
}

inline std::string ascii_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'a' && c <= 'z') c -= 'a' - 'A';
  return out;
}

// Position of the '}' matching the "${" at `open`, or nullopt.
inline std::optional<std::size_t> match_close(std::string_view s, std::size_t open) {
  int depth = 1;
  std::size_t i = open + 2;
  while (i < s.size()) {
    if (s[i] == '$' && i + 1 < s.size() && s[i + 1] == '{') {
      ++depth;
      i += 2;
      continue;
    }
    if (s[i] == '}') {
      if (--depth == 0) return i;
    }
    ++i;
  }
  return std::nullopt;
}

// First ":-" of a lookup body that is not inside a nested "${...}".
inline std::optional<std::size_t> top_level_default(std::string_view body) {
  int depth = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '$' && i + 1 < body.size() && body[i + 1] == '{') {
      ++depth;
      ++i;
      continue;
    }
    if (body[i] == '}') {
      if (depth > 0) --depth;
      continue;
    }
    if (depth == 0 && body[i] == ':' && i + 1 < body.size() && body[i + 1] == '-') return i;
  }
  return std::nullopt;
}

}  // namespace detail

inline LookupTemplate parse(std::string_view text) {
  LookupTemplate t;
  std::string lit;
  auto flush = [&] {
    if (!lit.empty()) {
      t.nodes.push_back(Node{Literal{std::move(lit)}});
      lit.clear();
    }
  };
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
      auto close = detail::match_close(text, i);
      if (!close) {
        lit.append(text.substr(i));
        break;
      }
      flush();
      const std::string_view raw = text.substr(i + 2, *close - (i + 2));
      Lookup lk;
      if (auto dpos = detail::top_level_default(raw)) {
        lk.body = parse(raw.substr(0, *dpos));
        lk.default_value = parse(raw.substr(*dpos + 2));
      } else {
        lk.body = parse(raw);
      }
      t.nodes.push_back(Node{std::move(lk)});
      i = *close + 1;
    } else {
      lit.push_back(text[i]);
      ++i;
    }
  }
  flush();
  return t;
}

inline void render_into(const LookupTemplate& t, std::string& out);

inline std::string render(const LookupTemplate& t) {
  std::string out;
  render_into(t, out);
  return out;
}

inline void render_into(const LookupTemplate& t, std::string& out) {
  for (const Node& n : t.nodes) {
    if (const auto* lit = std::get_if<Literal>(&n.value)) {
      out += lit->text;
    } else {
      const auto& lk = std::get<Lookup>(n.value);
      out += "${";
      render_into(lk.body, out);
      if (lk.default_value) {
        out += ":-";
        render_into(*lk.default_value, out);
      }
      out += '}';
    }
  }
}

inline int nesting_depth(const LookupTemplate& t) {
  int deepest = 0;
  for (const Node& n : t.nodes) {
    if (const auto* lk = std::get_if<Lookup>(&n.value)) {
      int d = 1 + nesting_depth(lk->body);
      if (lk->default_value) d = std::max(d, 1 + nesting_depth(*lk->default_value));
      deepest = std::max(deepest, d);
    }
  }
  return deepest;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct JndiRequestEvent {
  std::string uri;  // always scheme://host/path
  std::string scheme;
  std::string host;
  std::string path;
};

struct RecursionOverflowEvent {};

struct UnresolvedLookupEvent {
  std::string scheme;
  std::string arg;
};

using EvalEvent = std::variant<JndiRequestEvent, RecursionOverflowEvent, UnresolvedLookupEvent>;

enum class EvalError { RecursionOverflow };

enum class EvalSource { LogMessage, PatternLayout };

struct EvalOutcome {
  std::string text;
  std::vector<EvalEvent> events;
  std::optional<EvalError> error;
};

struct EventLog {
  std::vector<EvalEvent>& events;
  const std::function<void(const EvalEvent&)>& sink;
  void emit(EvalEvent e) {
    if (sink) sink(e);
    events.push_back(std::move(e));
  }
};

struct ResolveResult {
  enum class Kind {
    Resolved,  // text is substituted and itself evaluated again
    Verbatim,  // text is substituted as-is
    Failed,    // fall back to the default value / unresolved handling
  };
  Kind kind = Kind::Failed;
  std::string text;

  static ResolveResult resolved(std::string s) { return {Kind::Resolved, std::move(s)}; }
  static ResolveResult verbatim(std::string s) { return {Kind::Verbatim, std::move(s)}; }
  static ResolveResult failed() { return {}; }
};

struct EvalContext;

using Resolver = std::function<ResolveResult(const std::string& arg, const std::string& original,
                                             EvalContext& ctx, EventLog& log)>;

/// What an unresolvable lookup leaves behind: its original source text, or a
/// reconstructed "${...}" whose body has been flattened by evaluation. The
/// flattened form is what the payload detector canonicalizes with.
enum class UnresolvedStyle { Original, Flattened };

struct JndiUri {
  std::string uri;
  std::string scheme;
  std::string host;
  std::string path;
};

inline std::optional<JndiUri> parse_jndi_uri(std::string_view arg) {
  const auto sep = arg.find("://");
  if (sep == std::string_view::npos || sep == 0) return std::nullopt;
  JndiUri u;
  u.scheme = std::string(arg.substr(0, sep));
  std::string_view rest = arg.substr(sep + 3);
  const auto slash = rest.find('/');
  if (slash == std::string_view::npos) {
    u.host = std::string(rest);
    u.path = "/";
  } else {
    u.host = std::string(rest.substr(0, slash));
    u.path = std::string(rest.substr(slash));
  }
  if (u.host.empty()) return std::nullopt;
  u.uri = u.scheme + "://" + u.host + u.path;
  return u;
}

inline bool is_localhost(std::string_view host) {
  std::string h = detail::ascii_lower(host);
  if (auto colon = h.find(':'); colon != std::string::npos) h.resize(colon);
  return h == "localhost" || h == "127.0.0.1";
}

struct EvalContext {
  VersionProfile profile;
  std::map<std::string, Resolver> resolvers;  // keyed by lowercase scheme
  std::map<std::string, std::string> thread_context_map;
  std::map<std::string, std::string> environment;
  std::int64_t clock_epoch_seconds = 1639008000;  // fixed default keeps output stable
  int recursion_limit = 64;
  std::set<std::string> inert_schemes;  // never dispatched; kept as flattened lookup text
  UnresolvedStyle unresolved_style = UnresolvedStyle::Original;
  std::function<void(const EvalEvent&)> event_sink;  // optional observer; single writer

  static EvalContext with_defaults(VersionProfile profile);
};

namespace detail {

// Minimal subset of the java-style date pattern tokens the date scheme uses.
inline std::string format_epoch(std::int64_t epoch_seconds, std::string_view pattern) {
  if (pattern.empty()) pattern = "yyyy-MM-dd HH:mm:ss";
  std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  auto pad = [](int v, int width) {
    std::string s = std::to_string(v);
    while (s.size() < static_cast<std::size_t>(width)) s.insert(s.begin(), '0');
    return s;
  };
  std::string out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    const char c = pattern[i];
    std::size_t run = 1;
    while (i + run < pattern.size() && pattern[i + run] == c) ++run;
    switch (c) {
      case 'y': out += pad(tm.tm_year + 1900, run >= 4 ? 4 : 2); break;
      case 'M': out += pad(tm.tm_mon + 1, 2); break;
      case 'd': out += pad(tm.tm_mday, 2); break;
      case 'H': out += pad(tm.tm_hour, 2); break;
      case 'm': out += pad(tm.tm_min, 2); break;
      case 's': out += pad(tm.tm_sec, 2); break;
      default: out.append(run, c); break;
    }
    i += run;
  }
  return out;
}

struct RecursionOverflow {};

struct Evaluator {
  EvalContext& ctx;
  EventLog log;

  std::string eval_template(const LookupTemplate& t, int depth) {
    std::string out;
    for (const Node& n : t.nodes) {
      if (const auto* lit = std::get_if<Literal>(&n.value)) {
        out += lit->text;
      } else {
        out += eval_lookup(std::get<Lookup>(n.value), depth);
      }
    }
    return out;
  }

  std::string eval_lookup(const Lookup& lk, int depth) {
    if (depth >= ctx.recursion_limit) {
      if (ctx.profile.recursion_detection) return render_lookup(lk);  // clean stop
      log.emit(RecursionOverflowEvent{});
      throw RecursionOverflow{};
    }
    const std::string body = eval_template(lk.body, depth + 1);
    const auto colon = body.find(':');
    const std::string scheme = colon == std::string::npos ? body : body.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : body.substr(colon + 1);
    const std::string scheme_lc = ascii_lower(scheme);

    if (ctx.inert_schemes.count(scheme_lc) != 0) return flattened(lk, body, depth);

    if (auto it = ctx.resolvers.find(scheme_lc); it != ctx.resolvers.end()) {
      ResolveResult r = it->second(arg, render_lookup(lk), ctx, log);
      switch (r.kind) {
        case ResolveResult::Kind::Resolved:
          // Substituted values are substituted again; this is the pivot that
          // lets Thread Context values smuggle lookups in.
          return eval_template(parse(r.text), depth + 1);
        case ResolveResult::Kind::Verbatim:
          return r.text;
        case ResolveResult::Kind::Failed:
          break;
      }
    }

    if (lk.default_value) return eval_template(*lk.default_value, depth + 1);
    log.emit(UnresolvedLookupEvent{scheme, arg});
    if (ctx.unresolved_style == UnresolvedStyle::Original) return render_lookup(lk);
    return "${" + body + "}";
  }

  std::string flattened(const Lookup& lk, const std::string& body, int depth) {
    std::string out = "${" + body;
    if (lk.default_value) {
      out += ":-";
      out += eval_template(*lk.default_value, depth + 1);
    }
    out += '}';
    return out;
  }

  static std::string render_lookup(const Lookup& lk) {
    std::string out = "${";
    render_into(lk.body, out);
    if (lk.default_value) {
      out += ":-";
      render_into(*lk.default_value, out);
    }
    out += '}';
    return out;
  }
};

}  // namespace detail

inline std::map<std::string, Resolver> default_resolvers() {
  std::map<std::string, Resolver> r;
  r["lower"] = [](const std::string& arg, const std::string&, EvalContext&, EventLog&) {
    return ResolveResult::resolved(detail::ascii_lower(arg));
  };
  r["upper"] = [](const std::string& arg, const std::string&, EvalContext&, EventLog&) {
    return ResolveResult::resolved(detail::ascii_upper(arg));
  };
  r["env"] = [](const std::string& arg, const std::string&, EvalContext& ctx, EventLog&) {
    auto it = ctx.environment.find(arg);
    return it == ctx.environment.end() ? ResolveResult::failed() : ResolveResult::resolved(it->second);
  };
  r["ctx"] = [](const std::string& arg, const std::string&, EvalContext& ctx, EventLog&) {
    auto it = ctx.thread_context_map.find(arg);
    return it == ctx.thread_context_map.end() ? ResolveResult::failed()
                                              : ResolveResult::resolved(it->second);
  };
  r["date"] = [](const std::string& arg, const std::string&, EvalContext& ctx, EventLog&) {
    return ResolveResult::resolved(detail::format_epoch(ctx.clock_epoch_seconds, arg));
  };
  // The jndi scheme performs no I/O here. It only records what a vulnerable
  // deployment would have requested and leaves the source text in place so
  // downstream scanners still see it.
  r["jndi"] = [](const std::string& arg, const std::string& original, EvalContext& ctx,
                 EventLog& log) {
    if (!ctx.profile.jndi_lookup_present) {
      log.emit(UnresolvedLookupEvent{"jndi", arg});
      return ResolveResult::verbatim(original);
    }
    auto uri = parse_jndi_uri(arg);
    if (!uri) {
      log.emit(UnresolvedLookupEvent{"jndi", arg});
      return ResolveResult::verbatim(original);
    }
    if (ctx.profile.jndi_restricted_to_localhost && !is_localhost(uri->host))
      return ResolveResult::verbatim(original);  // suppressed, no event
    log.emit(JndiRequestEvent{uri->uri, uri->scheme, uri->host, uri->path});
    return ResolveResult::verbatim(original);
  };
  return r;
}

inline EvalContext EvalContext::with_defaults(VersionProfile profile) {
  EvalContext ctx;
  ctx.profile = profile;
  ctx.resolvers = default_resolvers();
  return ctx;
}

/// Expands lookups in `t` under the given profile. Never touches the network
/// or filesystem: every external effect is an event in the outcome. With a
/// LogMessage source and message lookups disabled (or formatMsgNoLookups set)
/// the input is returned verbatim; a PatternLayout source always evaluates.
inline EvalOutcome evaluate(const LookupTemplate& t, EvalContext& ctx, EvalSource source) {
  EvalOutcome out;
  if (source == EvalSource::LogMessage &&
      (!ctx.profile.message_lookups_enabled || ctx.profile.format_msg_no_lookups)) {
    out.text = render(t);
    return out;
  }
  detail::Evaluator ev{ctx, EventLog{out.events, ctx.event_sink}};
  try {
    out.text = ev.eval_template(t, 0);
  } catch (const detail::RecursionOverflow&) {
    out.error = EvalError::RecursionOverflow;
    out.text.clear();
  }
  return out;
}

inline EvalOutcome evaluate(std::string_view text, EvalContext& ctx, EvalSource source) {
  return evaluate(parse(text), ctx, source);
}

}  // namespace shellstop
