#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace ngnqos {

/// Host-order IPv4 address.
struct Ipv4 {
  std::uint32_t value = 0;

  auto operator<=>(const Ipv4&) const = default;

  static std::optional<Ipv4> parse(std::string_view text);
  std::string str() const;
};

struct Cidr {
  Ipv4 base;
  int prefix = 32;

  bool operator==(const Cidr&) const = default;

  static std::optional<Cidr> parse(std::string_view text);
  std::string str() const;

  bool contains(Ipv4 address) const;
  std::uint32_t mask() const;
  /// Host addresses; network and broadcast addresses are excluded for /30 and wider.
  std::uint64_t usable_count() const;
  Ipv4 first_usable() const;
  Ipv4 last_usable() const;
};

/// Lowest-free address allocator over one CIDR block.
class AddressPool {
 public:
  explicit AddressPool(Cidr block);

  std::optional<Ipv4> allocate();
  /// Returns false if the address was not allocated from this pool.
  bool release(Ipv4 address);

  const Cidr& block() const { return block_; }
  std::size_t free_count() const { return free_.size(); }
  std::size_t allocated_count() const { return allocated_.size(); }
  std::uint64_t capacity() const { return block_.usable_count(); }
  const std::set<Ipv4>& allocated() const { return allocated_; }
  const std::set<Ipv4>& free_addresses() const { return free_; }

 private:
  Cidr block_;
  std::set<Ipv4> free_;
  std::set<Ipv4> allocated_;
};

}  // namespace ngnqos
