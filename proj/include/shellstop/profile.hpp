#pragma once

#include "shellstop/version.hpp"

namespace shellstop {

/// Behavioral switches of one deployed Log4j configuration. Presets model the
/// default behavior of each release line; individual flags can be overridden
/// to model non-default deployments (e.g. a pattern layout that routes
/// Thread Context values through lookups).
struct VersionProfile {
  Log4jVersion version;
  bool message_lookups_enabled = true;
  bool jndi_lookup_present = true;
  bool jndi_restricted_to_localhost = false;
  bool recursion_detection = false;
  bool format_msg_no_lookups = false;
  bool context_pattern_lookup_enabled = false;

  static VersionProfile preset(const Log4jVersion& v) {
    VersionProfile p;
    p.version = v;
    const Log4jVersion v2_15{2, 15, 0};
    const Log4jVersion v2_16{2, 16, 0};
    const Log4jVersion v2_17{2, 17, 0};
    if (v < v2_15) {
      // Lookups expand inside logged messages and JNDI reaches any host.
      return p;
    }
    p.message_lookups_enabled = false;
    if (v < v2_16) {
      p.jndi_restricted_to_localhost = true;
      return p;
    }
    // 2.16 removed message lookups entirely and shipped JNDI disabled.
    p.jndi_lookup_present = false;
    p.jndi_restricted_to_localhost = true;
    p.recursion_detection = v >= v2_17;
    return p;
  }

  static VersionProfile preset(std::string_view version_text) {
    return preset(parse_version(version_text));
  }
};

}  // namespace shellstop
