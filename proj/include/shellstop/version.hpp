#pragma once

#include <compare>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shellstop {

struct MalformedVersion : std::runtime_error {
  explicit MalformedVersion(std::string_view text)
      : std::runtime_error("malformed log4j version: '" + std::string(text) + "'") {}
};

/// Log4j release coordinates. Beta builds order before the release carrying
/// the same numeric triple, so 2.0-beta9 < 2.0.0 and beta7 < beta9.
struct Log4jVersion {
  int major = 0;
  int minor = 0;
  int patch = 0;
  std::optional<int> beta;

  friend bool operator==(const Log4jVersion&, const Log4jVersion&) = default;

  friend std::strong_ordering operator<=>(const Log4jVersion& a, const Log4jVersion& b) {
    if (auto c = a.major <=> b.major; c != 0) return c;
    if (auto c = a.minor <=> b.minor; c != 0) return c;
    if (auto c = a.patch <=> b.patch; c != 0) return c;
    const int qa = a.beta ? *a.beta : std::numeric_limits<int>::max();
    const int qb = b.beta ? *b.beta : std::numeric_limits<int>::max();
    return qa <=> qb;
  }
};

namespace detail {

inline bool take_uint(std::string_view& s, int& out) {
  std::size_t n = 0;
  long v = 0;
  while (n < s.size() && s[n] >= '0' && s[n] <= '9') {
    v = v * 10 + (s[n] - '0');
    if (v > 1'000'000) return false;
    ++n;
  }
  if (n == 0) return false;
  out = static_cast<int>(v);
  s.remove_prefix(n);
  return true;
}

}  // namespace detail

/// Accepts "2.15.0", "2.16" (patch defaults to 0) and "2.0-beta9".
inline Log4jVersion parse_version(std::string_view text) {
  std::string_view s = text;
  Log4jVersion v;
  if (!detail::take_uint(s, v.major)) throw MalformedVersion(text);
  if (s.empty() || s.front() != '.') throw MalformedVersion(text);
  s.remove_prefix(1);
  if (!detail::take_uint(s, v.minor)) throw MalformedVersion(text);
  if (!s.empty() && s.front() == '.') {
    s.remove_prefix(1);
    if (!detail::take_uint(s, v.patch)) throw MalformedVersion(text);
  }
  if (!s.empty()) {
    if (!s.starts_with("-beta")) throw MalformedVersion(text);
    s.remove_prefix(5);
    int n = 0;
    if (!detail::take_uint(s, n) || n <= 0 || !s.empty()) throw MalformedVersion(text);
    v.beta = n;
  }
  return v;
}

inline std::string to_string(const Log4jVersion& v) {
  std::string s = std::to_string(v.major) + "." + std::to_string(v.minor);
  if (!(v.beta && v.patch == 0)) s += "." + std::to_string(v.patch);
  if (v.beta) s += "-beta" + std::to_string(*v.beta);
  return s;
}

}  // namespace shellstop
