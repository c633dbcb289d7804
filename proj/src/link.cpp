#include "ngnqos/link.hpp"

namespace ngnqos {

std::string_view to_string(LinkDirection d) { return d == LinkDirection::up ? "up" : "down"; }

std::string LinkRef::str() const { return link_id + "/" + std::string(to_string(direction)); }

std::optional<LinkRef> LinkRef::parse(std::string_view text) {
  auto slash = text.rfind('/');
  if (slash == std::string_view::npos || slash == 0) return std::nullopt;
  auto dir = text.substr(slash + 1);
  if (dir != "up" && dir != "down") return std::nullopt;
  return LinkRef{std::string(text.substr(0, slash)),
                 dir == "up" ? LinkDirection::up : LinkDirection::down};
}

std::map<TransportServiceClass, double> LinkConfig::default_shares() {
  using C = TransportServiceClass;
  return {{C::EF, 0.30}, {C::AF1, 0.125}, {C::AF2, 0.125},
          {C::AF3, 0.125}, {C::AF4, 0.125}, {C::BE, 0.0}};
}

}  // namespace ngnqos
