#include "ngnqos/nass.hpp"

#include <algorithm>

#include "ngnqos/core_json.hpp"

namespace ngnqos::nass {

std::string_view to_string(NassErrc code) {
  switch (code) {
    case NassErrc::UnknownSubscriber: return "UnknownSubscriber";
    case NassErrc::UnknownAccessNetwork: return "UnknownAccessNetwork";
    case NassErrc::PoolExhausted: return "PoolExhausted";
    case NassErrc::AlreadyAttached: return "AlreadyAttached";
    case NassErrc::NotAttached: return "NotAttached";
  }
  return "?";
}

void TerminalProfile::validate() const {
  const auto& ifs = connectivity.supported_interfaces;
  if (std::find(ifs.begin(), ifs.end(), connectivity.current_interface) == ifs.end())
    throw std::invalid_argument("current interface '" + connectivity.current_interface +
                                "' is not among the supported interfaces");
  if (connectivity.dl_capability < 0 || connectivity.ul_capability < 0)
    throw std::invalid_argument("terminal capabilities must be non-negative");
  ngnqos::validate(user_preferences.desired_quality);
}

void TransportQoSProfile::validate() const {
  if (ul_default_bandwidth < 0 || dl_default_bandwidth < 0 || ul_subscribed_bandwidth < 0 ||
      dl_subscribed_bandwidth < 0)
    throw std::invalid_argument("profile bandwidths must be non-negative");
  if (ul_default_bandwidth > ul_subscribed_bandwidth ||
      dl_default_bandwidth > dl_subscribed_bandwidth)
    throw std::invalid_argument("default bandwidth exceeds subscribed bandwidth");
  if (maximum_priority < kMinPriority || maximum_priority > kMaxPriority)
    throw std::invalid_argument("maximum priority must lie in [0, 15]");
}

Json to_json(const AccessSessionRecord& r) {
  const auto& p = r.qos_profile;
  return Json{
      {"subscriber_id", r.subscriber_id},
      {"ip_address", r.ip_address},
      {"realm", r.realm},
      {"logical_access_id", r.logical_access_id},
      {"physical_access_id", r.physical_access_id},
      {"access_network_type", r.access_network_type},
      {"racs_point_of_contact", r.racs_point_of_contact},
      {"privacy_indicator", r.privacy_indicator},
      {"location", r.location},
      {"gate", r.gate},
      {"attached_at", r.attached_at},
      {"qos_profile",
       {{"transport_service_class", p.transport_service_class},
        {"requestor_name", p.requestor_name},
        {"media_type", p.media_type},
        {"maximum_priority", p.maximum_priority},
        {"ul_subscribed_bandwidth", p.ul_subscribed_bandwidth},
        {"dl_subscribed_bandwidth", p.dl_subscribed_bandwidth},
        {"ul_default_bandwidth", p.ul_default_bandwidth},
        {"dl_default_bandwidth", p.dl_default_bandwidth}}},
  };
}

Nass::Nass(std::vector<AccessNetwork> networks, std::vector<Subscription> subscriptions,
           EventLog& log, const Scheduler& clock)
    : networks_(std::move(networks)), log_(&log), clock_(&clock) {
  for (const auto& n : networks_) {
    if (!pools_.emplace(n.id, AddressPool(n.pool)).second)
      throw std::invalid_argument("duplicate access network '" + n.id + "'");
  }
  // Pools must not overlap, otherwise addresses would not be globally unique.
  for (std::size_t i = 0; i < networks_.size(); ++i)
    for (std::size_t k = i + 1; k < networks_.size(); ++k) {
      const Cidr& a = networks_[i].pool;
      const Cidr& b = networks_[k].pool;
      if (a.contains(b.base) || b.contains(a.base))
        throw std::invalid_argument("address pools of '" + networks_[i].id + "' and '" +
                                    networks_[k].id + "' overlap");
    }
  for (auto& s : subscriptions) {
    s.qos_profile.validate();
    std::string id = s.subscriber_id;
    if (!subscriptions_.emplace(id, std::move(s)).second)
      throw std::invalid_argument("duplicate subscription '" + id + "'");
  }
}

const AccessNetwork& Nass::access_network(std::string_view id) const {
  for (const auto& n : networks_)
    if (n.id == id) return n;
  throw NassError(NassErrc::UnknownAccessNetwork, std::string(id));
}

const AddressPool& Nass::pool(std::string_view access_network_id) const {
  auto it = pools_.find(access_network_id);
  if (it == pools_.end()) throw NassError(NassErrc::UnknownAccessNetwork, std::string(access_network_id));
  return it->second;
}

AccessSessionRecord Nass::attach(const std::string& subscriber_id,
                                 const std::string& access_network_id,
                                 const TerminalProfile& terminal, const std::string& credentials) {
  const AccessNetwork& network = access_network(access_network_id);
  auto sub = subscriptions_.find(subscriber_id);
  if (sub == subscriptions_.end() || sub->second.credentials != credentials) {
    log_->emit("nass.attach", {{"subscriber_id", subscriber_id},
                               {"access_network", access_network_id},
                               {"result", "rejected"},
                               {"reason", "UnknownSubscriber"}});
    throw NassError(NassErrc::UnknownSubscriber, subscriber_id);
  }
  if (records_.count(subscriber_id)) {
    log_->emit("nass.attach", {{"subscriber_id", subscriber_id},
                               {"access_network", access_network_id},
                               {"result", "rejected"},
                               {"reason", "AlreadyAttached"}});
    throw NassError(NassErrc::AlreadyAttached, subscriber_id);
  }
  terminal.validate();
  auto& pool = pools_.at(access_network_id);
  auto address = pool.allocate();
  if (!address) {
    log_->emit("nass.attach", {{"subscriber_id", subscriber_id},
                               {"access_network", access_network_id},
                               {"result", "rejected"},
                               {"reason", "PoolExhausted"}});
    throw NassError(NassErrc::PoolExhausted, access_network_id);
  }

  const Subscription& s = sub->second;
  AccessSessionRecord r;
  r.subscriber_id = subscriber_id;
  r.ip_address = address->str();
  r.realm = access_network_id;
  r.logical_access_id = access_network_id + "/" + subscriber_id;
  r.physical_access_id = network.access_link + "/" + terminal.connectivity.current_interface;
  r.access_network_type = network.type;
  r.racs_point_of_contact = network.racs_point_of_contact;
  r.privacy_indicator = s.privacy_indicator;
  r.location = s.location;
  r.terminal = terminal;
  r.qos_profile = s.qos_profile;
  r.gate = s.qos_profile.initial_gate;
  r.attached_at = clock_->now();

  subscriber_by_ip_[r.ip_address] = subscriber_id;
  records_[subscriber_id] = r;
  Json payload = to_json(r);
  payload["result"] = "attached";
  log_->emit("nass.attach", std::move(payload));
  for (auto& l : attach_listeners_) l(r);
  return r;
}

std::optional<AccessSessionRecord> Nass::find_by_subscriber(std::string_view subscriber_id) const {
  auto it = records_.find(subscriber_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::optional<AccessSessionRecord> Nass::find_by_ip(std::string_view ip) const {
  auto it = subscriber_by_ip_.find(ip);
  if (it == subscriber_by_ip_.end()) return std::nullopt;
  return records_.at(it->second);
}

AccessSessionRecord Nass::lookup(std::string_view key) const {
  auto found = Ipv4::parse(key) ? find_by_ip(key) : find_by_subscriber(key);
  if (!found) throw NassError(NassErrc::NotAttached, std::string(key));
  return *found;
}

void Nass::detach(const std::string& subscriber_id) {
  auto it = records_.find(subscriber_id);
  if (it == records_.end()) throw NassError(NassErrc::NotAttached, subscriber_id);
  AccessSessionRecord r = std::move(it->second);
  records_.erase(it);
  subscriber_by_ip_.erase(r.ip_address);
  pools_.at(r.realm).release(*Ipv4::parse(r.ip_address));
  log_->emit("nass.detach", {{"subscriber_id", r.subscriber_id},
                             {"ip_address", r.ip_address},
                             {"realm", r.realm}});
  for (auto& l : detach_listeners_) l(r);
}

void Nass::update_location(const std::string& subscriber_id, const std::string& location) {
  auto it = records_.find(subscriber_id);
  if (it == records_.end()) throw NassError(NassErrc::NotAttached, subscriber_id);
  std::string previous = it->second.location;
  it->second.location = location;
  log_->emit("nass.location", {{"subscriber_id", subscriber_id},
                               {"previous", previous},
                               {"location", location},
                               {"changed", previous != location}});
}

std::vector<AccessSessionRecord> Nass::active_records() const {
  std::vector<AccessSessionRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, r] : records_) out.push_back(r);
  return out;
}

}  // namespace ngnqos::nass
