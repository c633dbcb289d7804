#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

#include "ngnqos/core_model.hpp"

namespace ngnqos {

/// Exact-match classifier key installed by the control plane per session.
struct FlowKey {
  std::string src;
  std::string dst;
  std::string session_id;

  auto operator<=>(const FlowKey&) const = default;

  /// "src>dst#session"
  std::string str() const { return src + ">" + dst + "#" + session_id; }
};

struct PolicerSpec {
  std::int64_t rate_kbps = 0;
  std::int64_t burst_bits = 0;
  bool operator==(const PolicerSpec&) const = default;
};

/// L3/L2 enforcement directive derived from a committed grant.
struct TrafficPolicy {
  FlowKey flow_key;
  std::string grant_id;
  TransportServiceClass service_class = TransportServiceClass::BE;
  std::uint8_t dscp = 0;
  GateSetting gate;
  PolicerSpec policer;
  /// Better-best-effort marking: discarded after plain BE on queue overflow.
  bool low_drop_precedence = false;
  /// Address translation attribute; carried but behaviourally inert.
  std::optional<std::string> nat;

  bool operator==(const TrafficPolicy&) const = default;
};

}  // namespace ngnqos
