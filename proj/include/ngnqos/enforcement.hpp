#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "ngnqos/link.hpp"
#include "ngnqos/token_bucket.hpp"
#include "ngnqos/traffic_policy.hpp"

namespace ngnqos::transport {

enum class DropReason : std::uint8_t { gate_closed, policed, queue_overflow };

std::string_view to_string(DropReason r);

/// Usage metering counters kept per installed policy.
struct Meter {
  std::uint64_t packets_passed = 0;
  std::uint64_t bytes_passed = 0;
  std::uint64_t packets_policed = 0;
};

struct Verdict {
  bool pass = false;
  std::uint8_t dscp = 0;
  TransportServiceClass service_class = TransportServiceClass::BE;
  bool low_drop_precedence = false;
  /// Passed under the subscriber's attach-time gate rather than a session policy.
  bool via_default_gate = false;
  std::optional<DropReason> reason;
};

/// Attach-time gate settings keyed by subscriber address.
using DefaultGates = std::map<std::string, GateSetting, std::less<>>;

/// Policy enforcement point at the ingress of one link direction.
class EnforcementPoint {
 public:
  explicit EnforcementPoint(LinkRef where) : where_(std::move(where)) {}

  const LinkRef& where() const { return where_; }

  /// Installs or replaces the policy for its flow key. Replacement keeps the
  /// meter and re-dimensions the existing bucket.
  void install(const TrafficPolicy& policy, SimTime now);
  bool remove(const FlowKey& key);

  const TrafficPolicy* find(const FlowKey& key) const;
  const Meter* meter(const FlowKey& key) const;
  const TokenBucket* bucket(const FlowKey& key) const;
  std::size_t installed_count() const { return entries_.size(); }

  /// Exact flow-key match; an open-gated match is marked and, when `police`
  /// is set, policed. Unmatched packets fall back to the default gates and
  /// otherwise drop as gate_closed.
  Verdict classify(const FlowKey& key, std::int64_t size_bytes, SimTime now, bool police,
                   const DefaultGates* defaults = nullptr);

 private:
  struct Entry {
    TrafficPolicy policy;
    TokenBucket bucket;
    Meter meter;
  };

  LinkRef where_;
  std::map<FlowKey, Entry> entries_;
};

/// All enforcement points of a network plus the shared default-gate table.
class EnforcementRegistry {
 public:
  EnforcementPoint& at(const LinkRef& where);
  const EnforcementPoint* find(const LinkRef& where) const;
  const std::map<LinkRef, EnforcementPoint>& points() const { return points_; }

  void set_default_gate(const std::string& address, const GateSetting& gate);
  void clear_default_gate(const std::string& address);
  const DefaultGates& default_gates() const { return default_gates_; }

 private:
  std::map<LinkRef, EnforcementPoint> points_;
  DefaultGates default_gates_;
};

}  // namespace ngnqos::transport
