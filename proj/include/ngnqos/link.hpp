#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "ngnqos/core_model.hpp"
#include "ngnqos/scheduler.hpp"

namespace ngnqos {

/// Links are full duplex; each direction is scheduled and reserved separately.
enum class LinkDirection : std::uint8_t { up, down };

std::string_view to_string(LinkDirection d);

struct LinkRef {
  std::string link_id;
  LinkDirection direction = LinkDirection::up;

  auto operator<=>(const LinkRef&) const = default;

  /// "core/up"
  std::string str() const;
  static std::optional<LinkRef> parse(std::string_view text);
};

struct LinkConfig {
  std::string id;
  std::int64_t rate_kbps = 0;
  SimTime propagation_delay = kMicrosPerMilli;
  /// Fraction of capacity admissible per class; BE is never reserved.
  std::map<TransportServiceClass, double> class_shares;

  bool operator==(const LinkConfig&) const = default;

  static std::map<TransportServiceClass, double> default_shares();
};

}  // namespace ngnqos
