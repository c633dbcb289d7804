#include "ngnqos/address.hpp"

#include <charconv>
#include <stdexcept>

namespace ngnqos {

namespace {

std::optional<unsigned> parse_uint(std::string_view text, unsigned max) {
  if (text.empty() || text.size() > 3) return std::nullopt;
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v > max) return std::nullopt;
  return v;
}

}  // namespace

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  for (int octet = 0; octet < 4; ++octet) {
    auto dot = text.find('.');
    if ((octet < 3) == (dot == std::string_view::npos)) return std::nullopt;
    auto part = parse_uint(text.substr(0, dot), 255);
    if (!part) return std::nullopt;
    value = (value << 8) | *part;
    text = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  }
  return Ipv4{value};
}

std::string Ipv4::str() const {
  return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xff) + '.' +
         std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
}

std::optional<Cidr> Cidr::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto base = Ipv4::parse(text.substr(0, slash));
  auto prefix = parse_uint(text.substr(slash + 1), 32);
  if (!base || !prefix) return std::nullopt;
  Cidr c{*base, static_cast<int>(*prefix)};
  if ((c.base.value & c.mask()) != c.base.value) return std::nullopt;  // host bits set
  return c;
}

std::string Cidr::str() const { return base.str() + '/' + std::to_string(prefix); }

std::uint32_t Cidr::mask() const {
  return prefix == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix);
}

bool Cidr::contains(Ipv4 address) const { return (address.value & mask()) == base.value; }

std::uint64_t Cidr::usable_count() const {
  std::uint64_t size = std::uint64_t{1} << (32 - prefix);
  return prefix >= 31 ? size : size - 2;
}

Ipv4 Cidr::first_usable() const { return Ipv4{base.value + (prefix >= 31 ? 0u : 1u)}; }

Ipv4 Cidr::last_usable() const {
  std::uint32_t broadcast = base.value | ~mask();
  return Ipv4{broadcast - (prefix >= 31 ? 0u : 1u)};
}

AddressPool::AddressPool(Cidr block) : block_(block) {
  if (block_.prefix < 16) throw std::invalid_argument("address pool wider than /16: " + block_.str());
  for (std::uint64_t a = block_.first_usable().value; a <= block_.last_usable().value; ++a)
    free_.insert(Ipv4{static_cast<std::uint32_t>(a)});
}

std::optional<Ipv4> AddressPool::allocate() {
  if (free_.empty()) return std::nullopt;
  auto node = free_.extract(free_.begin());
  Ipv4 address = node.value();
  allocated_.insert(std::move(node));
  return address;
}

bool AddressPool::release(Ipv4 address) {
  auto node = allocated_.extract(address);
  if (node.empty()) return false;
  free_.insert(std::move(node));
  return true;
}

}  // namespace ngnqos
