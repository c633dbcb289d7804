#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ngnqos/address.hpp"
#include "ngnqos/core_model.hpp"
#include "ngnqos/event_log.hpp"
#include "ngnqos/scheduler.hpp"

namespace ngnqos::nass {

struct HardwareProfile {
  std::string model;
  std::string display;
  std::string cpu_mem;
  bool sound = true;
  bool operator==(const HardwareProfile&) const = default;
};

struct ConnectivityProfile {
  std::vector<std::string> supported_interfaces;
  std::string current_interface;
  std::int64_t dl_capability = 0;  // kbit/s
  std::int64_t ul_capability = 0;  // kbit/s
  bool operator==(const ConnectivityProfile&) const = default;
};

struct SoftwareProfile {
  std::string os;
  std::string browser;
  std::vector<MediaType> media_types;
  bool content_protection = false;
  bool operator==(const SoftwareProfile&) const = default;
};

struct UserPreferences {
  QoSParameters desired_quality;
  std::optional<std::int64_t> budget_limit;
  std::optional<std::int64_t> time_constraint;  // seconds
  bool operator==(const UserPreferences&) const = default;
};

struct TerminalProfile {
  HardwareProfile hardware;
  ConnectivityProfile connectivity;
  SoftwareProfile software;
  UserPreferences user_preferences;

  bool operator==(const TerminalProfile&) const = default;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct TransportQoSProfile {
  TransportServiceClass transport_service_class = TransportServiceClass::BE;
  std::string requestor_name;
  MediaType media_type = MediaType::data;
  int maximum_priority = 0;
  std::int64_t ul_subscribed_bandwidth = 0;
  std::int64_t dl_subscribed_bandwidth = 0;
  std::int64_t ul_default_bandwidth = 0;
  std::int64_t dl_default_bandwidth = 0;
  GateSetting initial_gate;

  bool operator==(const TransportQoSProfile&) const = default;

  /// Throws std::invalid_argument.
  void validate() const;
};

/// Transport-layer access/session/subscription record.
struct AccessSessionRecord {
  std::string subscriber_id;
  std::string ip_address;
  std::string realm;
  std::string logical_access_id;
  std::string physical_access_id;
  std::string access_network_type;
  std::string racs_point_of_contact;
  bool privacy_indicator = false;
  std::string location;
  TerminalProfile terminal;
  TransportQoSProfile qos_profile;
  GateSetting gate;
  SimTime attached_at = 0;

  bool operator==(const AccessSessionRecord&) const = default;
};

struct AccessNetwork {
  std::string id;
  std::string type;
  Cidr pool;
  std::string access_link;
  std::string racs_point_of_contact;
  bool operator==(const AccessNetwork&) const = default;
};

/// Subscription store entry consulted at attach time.
struct Subscription {
  std::string subscriber_id;
  std::string credentials;
  TransportQoSProfile qos_profile;
  bool privacy_indicator = false;
  std::string location;
  bool operator==(const Subscription&) const = default;
};

enum class NassErrc { UnknownSubscriber, UnknownAccessNetwork, PoolExhausted, AlreadyAttached, NotAttached };

std::string_view to_string(NassErrc code);

class NassError : public std::runtime_error {
 public:
  NassError(NassErrc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  NassErrc code() const { return code_; }

 private:
  NassErrc code_;
};

Json to_json(const AccessSessionRecord& record);

/// Network attachment subsystem: admits terminals, hands out addresses from
/// per-network pools, and keeps the access-session repository RACS consults.
class Nass {
 public:
  using DetachListener = std::function<void(const AccessSessionRecord&)>;
  using AttachListener = std::function<void(const AccessSessionRecord&)>;

  Nass(std::vector<AccessNetwork> networks, std::vector<Subscription> subscriptions,
       EventLog& log, const Scheduler& clock);

  AccessSessionRecord attach(const std::string& subscriber_id, const std::string& access_network_id,
                             const TerminalProfile& terminal, const std::string& credentials);

  /// `key` is either a subscriber id or a dotted-quad address.
  AccessSessionRecord lookup(std::string_view key) const;
  std::optional<AccessSessionRecord> find_by_subscriber(std::string_view subscriber_id) const;
  std::optional<AccessSessionRecord> find_by_ip(std::string_view ip) const;

  void detach(const std::string& subscriber_id);
  void update_location(const std::string& subscriber_id, const std::string& location);

  void on_attach(AttachListener listener) { attach_listeners_.push_back(std::move(listener)); }
  void on_detach(DetachListener listener) { detach_listeners_.push_back(std::move(listener)); }

  const AccessNetwork& access_network(std::string_view id) const;
  const std::vector<AccessNetwork>& access_networks() const { return networks_; }
  const AddressPool& pool(std::string_view access_network_id) const;
  std::vector<AccessSessionRecord> active_records() const;

 private:
  std::vector<AccessNetwork> networks_;
  std::map<std::string, AddressPool, std::less<>> pools_;
  std::map<std::string, Subscription, std::less<>> subscriptions_;
  std::map<std::string, AccessSessionRecord, std::less<>> records_;       // by subscriber
  std::map<std::string, std::string, std::less<>> subscriber_by_ip_;
  std::vector<AttachListener> attach_listeners_;
  std::vector<DetachListener> detach_listeners_;
  EventLog* log_;
  const Scheduler* clock_;
};

}  // namespace ngnqos::nass
