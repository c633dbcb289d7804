#include "ngnqos/enforcement.hpp"

namespace ngnqos::transport {

std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::gate_closed: return "gate_closed";
    case DropReason::policed: return "policed";
    case DropReason::queue_overflow: return "queue_overflow";
  }
  return "?";
}

void EnforcementPoint::install(const TrafficPolicy& policy, SimTime now) {
  auto it = entries_.find(policy.flow_key);
  if (it == entries_.end()) {
    entries_.emplace(policy.flow_key,
                     Entry{policy, TokenBucket(policy.policer.rate_kbps, policy.policer.burst_bits, now), {}});
    return;
  }
  it->second.policy = policy;
  it->second.bucket.reconfigure(policy.policer.rate_kbps, policy.policer.burst_bits, now);
}

bool EnforcementPoint::remove(const FlowKey& key) { return entries_.erase(key) > 0; }

const TrafficPolicy* EnforcementPoint::find(const FlowKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second.policy;
}

const Meter* EnforcementPoint::meter(const FlowKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second.meter;
}

const TokenBucket* EnforcementPoint::bucket(const FlowKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second.bucket;
}

Verdict EnforcementPoint::classify(const FlowKey& key, std::int64_t size_bytes, SimTime now,
                                   bool police, const DefaultGates* defaults) {
  Verdict v;
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    Entry& e = it->second;
    if (!e.policy.gate.passes(key.dst)) {
      v.reason = DropReason::gate_closed;
      return v;
    }
    if (police && !e.bucket.police(size_bytes, now)) {
      ++e.meter.packets_policed;
      v.reason = DropReason::policed;
      return v;
    }
    ++e.meter.packets_passed;
    e.meter.bytes_passed += static_cast<std::uint64_t>(size_bytes);
    v.pass = true;
    v.dscp = e.policy.dscp;
    v.service_class = e.policy.service_class;
    v.low_drop_precedence = e.policy.low_drop_precedence;
    return v;
  }
  if (defaults) {
    auto src = defaults->find(key.src);
    auto dst = defaults->find(key.dst);
    if ((src != defaults->end() && src->second.passes(key.dst)) ||
        (dst != defaults->end() && dst->second.passes(key.src))) {
      v.pass = true;
      v.via_default_gate = true;
      return v;  // unmarked best effort
    }
  }
  v.reason = DropReason::gate_closed;
  return v;
}

EnforcementPoint& EnforcementRegistry::at(const LinkRef& where) {
  auto it = points_.find(where);
  if (it == points_.end()) it = points_.emplace(where, EnforcementPoint(where)).first;
  return it->second;
}

const EnforcementPoint* EnforcementRegistry::find(const LinkRef& where) const {
  auto it = points_.find(where);
  return it == points_.end() ? nullptr : &it->second;
}

void EnforcementRegistry::set_default_gate(const std::string& address, const GateSetting& gate) {
  default_gates_[address] = gate;
}

void EnforcementRegistry::clear_default_gate(const std::string& address) {
  default_gates_.erase(address);
}

}  // namespace ngnqos::transport
