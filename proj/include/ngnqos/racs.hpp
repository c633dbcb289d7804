#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ngnqos/core_model.hpp"
#include "ngnqos/enforcement.hpp"
#include "ngnqos/event_log.hpp"
#include "ngnqos/link.hpp"
#include "ngnqos/nass.hpp"
#include "ngnqos/scheduler.hpp"

namespace ngnqos::racs {

enum class AdmissionMode : std::uint8_t {
  enforced,   // reserve against the class share
  unreserved  // admit without reserving capacity (best-effort style)
};

std::string_view to_string(AdmissionMode m);
std::optional<AdmissionMode> parse_admission_mode(std::string_view s);

/// Unset fields match anything. Name patterns are shell globs.
struct PolicyMatch {
  std::optional<MediaType> media_type;
  std::optional<std::string> requestor_name;
  std::optional<std::string> access_network_type;
  std::optional<std::string> subscriber_pattern;

  bool operator==(const PolicyMatch&) const = default;
};

/// Policy repository entry. `limits` bound requests per `satisfies`:
/// bandwidth and priority are maxima, delay/jitter/loss are the tightest
/// values a request may ask for.
struct ServicePolicy {
  std::string policy_id;
  PolicyMatch match;
  QoSParameters limits;
  std::optional<TransportServiceClass> class_override;
  int precedence = 0;
  AdmissionMode admission = AdmissionMode::enforced;
  int burst_ms = 20;
  std::optional<std::string> nat;

  bool operator==(const ServicePolicy&) const = default;
};

enum class RequestKind : std::uint8_t { reserve, authorize_only, modify, release };
enum class RequestOrigin : std::uint8_t { service_layer, device };

std::string_view to_string(RequestKind k);
std::string_view to_string(RequestOrigin o);

struct ResourceRequest {
  std::string session_id;
  std::string subscriber_ip;
  std::string peer_ip;
  MediaType media_type = MediaType::data;
  TrafficPattern traffic_pattern;
  QoSParameters qos;
  /// Lowest acceptable operation point; bandwidth caps below it are refused.
  QoSParameters floor;
  std::string requestor_name;
  RequestKind kind = RequestKind::reserve;
  RequestOrigin origin = RequestOrigin::service_layer;

  bool operator==(const ResourceRequest&) const = default;
};

Json to_json(const ResourceRequest& r);

enum class DenialReason : std::uint8_t {
  policy_violation,
  exceeds_subscription,
  exceeds_priority,
  insufficient_resources,
  token_invalid,
  token_expired,
  exceeds_authorization,
  unknown_grant,
  not_attached,
  invalid_request,
};

std::string_view to_string(DenialReason r);
std::optional<DenialReason> parse_denial_reason(std::string_view s);

struct Denial {
  DenialReason reason = DenialReason::invalid_request;
  std::string detail;
  bool operator==(const Denial&) const = default;
};

template <typename T>
using Outcome = std::variant<T, Denial>;

struct Reservation {
  LinkRef link;
  std::int64_t amount = 0;  // kbit/s
  bool operator==(const Reservation&) const = default;
};

struct ResourceGrant {
  std::string grant_id;
  std::string session_id;
  std::string subscriber_ip;
  std::string peer_ip;
  QoSParameters qos;
  TransportServiceClass service_class = TransportServiceClass::BE;
  TrafficPattern traffic_pattern;
  std::vector<LinkRef> links;
  std::vector<Reservation> reservations;
  std::string policy_id;
  std::string resource_control_function;
  AdmissionMode admission = AdmissionMode::enforced;
  int burst_ms = 20;
  std::optional<std::string> nat;
  bool committed = false;

  bool operator==(const ResourceGrant&) const = default;
};

struct AuthorizationToken {
  std::string token_id;
  std::string session_id;
  QoSParameters authorized_qos;
  SimTime expires_at = 0;
  bool redeemed = false;

  bool operator==(const AuthorizationToken&) const = default;
};

/// Per link-direction admission bookkeeping.
class LinkCapacityModel {
 public:
  LinkCapacityModel(LinkRef link, std::int64_t capacity_kbps,
                    std::map<TransportServiceClass, double> class_shares);

  const LinkRef& link() const { return link_; }
  std::int64_t capacity() const { return capacity_; }
  double share(TransportServiceClass c) const;
  /// floor(share x capacity)
  std::int64_t limit(TransportServiceClass c) const;
  std::int64_t reserved(TransportServiceClass c) const;
  std::int64_t total_reserved() const;
  std::int64_t peak(TransportServiceClass c) const;
  std::int64_t peak_total() const { return peak_total_; }

  /// Would changing the class reservation by `delta` keep both invariants?
  bool admits(TransportServiceClass c, std::int64_t delta) const;
  /// Throws std::logic_error if the change would break an invariant.
  void apply(TransportServiceClass c, std::int64_t delta);
  bool invariants_hold() const;

 private:
  LinkRef link_;
  std::int64_t capacity_;
  std::map<TransportServiceClass, double> shares_;
  std::map<TransportServiceClass, std::int64_t> reserved_;
  std::map<TransportServiceClass, std::int64_t> peak_;
  std::int64_t peak_total_ = 0;
};

class PolicyRepository {
 public:
  PolicyRepository() = default;
  explicit PolicyRepository(std::vector<ServicePolicy> policies);

  /// Throws std::invalid_argument on a duplicate id or precedence.
  void add(ServicePolicy policy);
  const std::vector<ServicePolicy>& policies() const { return policies_; }

  static bool matches(const ServicePolicy& policy, const ResourceRequest& request,
                      const nass::AccessSessionRecord& record);
  /// Catch-all: subscribed bandwidths, any delay/jitter/loss, any priority.
  static ServicePolicy default_policy(const nass::AccessSessionRecord& record);

  /// Highest-precedence match, or the default policy.
  ServicePolicy choose(const ResourceRequest& request, const nass::AccessSessionRecord& record) const;

 private:
  std::vector<ServicePolicy> policies_;
};

struct ResourceControlConfig {
  std::string id;
  std::vector<std::string> access_network_types;
  bool operator==(const ResourceControlConfig&) const = default;
};

struct RacsConfig {
  std::vector<LinkConfig> links;
  std::string core_link;
  std::vector<ResourceControlConfig> resource_control;
  std::vector<ServicePolicy> policies;
  ClassMapping class_mapping;
  DscpTable dscp;
  SimTime token_ttl = 30 * kMicrosPerSecond;
  /// BE grants at or above this priority are marked better-best-effort.
  std::optional<int> better_best_effort_min_priority;
};

struct Released {
  std::string grant_id;
  bool operator==(const Released&) const = default;
};

struct RacsResponse {
  std::string session_id;
  RequestKind kind = RequestKind::reserve;
  std::variant<ResourceGrant, AuthorizationToken, Denial, Released> outcome;

  bool granted() const { return std::holds_alternative<ResourceGrant>(outcome); }
  const Denial* denial() const { return std::get_if<Denial>(&outcome); }
};

enum class RacsErrc { invalid_state, unknown_grant, configuration };

class RacsError : public std::runtime_error {
 public:
  RacsError(RacsErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  RacsErrc code() const { return code_; }

 private:
  RacsErrc code_;
};

/// Local policy decision point for the access networks it serves. Reserves
/// atomically over an arbitrary link list.
class ResourceControlFunction {
 public:
  ResourceControlFunction(ResourceControlConfig config,
                          std::map<LinkRef, LinkCapacityModel>& links);

  const std::string& id() const { return config_.id; }
  bool serves(std::string_view access_network_type) const;

  /// All-or-nothing: either every reservation is applied or none is.
  bool reserve(TransportServiceClass c, const std::vector<Reservation>& wanted);
  /// Swaps `current` for `wanted` atomically.
  bool modify(TransportServiceClass c, const std::vector<Reservation>& current,
              const std::vector<Reservation>& wanted);
  void release(TransportServiceClass c, const std::vector<Reservation>& current);

 private:
  ResourceControlConfig config_;
  std::map<LinkRef, LinkCapacityModel>* links_;
};

/// Resource and admission control subsystem: the policy decision function
/// (final PDP) plus resource control functions (local PDPs) and the
/// enforcement directives they install.
class Racs {
 public:
  Racs(RacsConfig config, const nass::Nass& nass, transport::EnforcementRegistry& enforcement,
       EventLog& log, const Scheduler& clock);

  /// Full pipeline for one request: policy choice, authorization, and for
  /// reserve/modify the reservation and enforcement update.
  RacsResponse handle(const ResourceRequest& request);
  RacsResponse redeem_token(const std::string& token_id, const QoSParameters& requested);

  ServicePolicy choose_policy(const ResourceRequest& request,
                              const nass::AccessSessionRecord& record) const;
  Outcome<QoSParameters> authorize(const ResourceRequest& request, const ServicePolicy& policy,
                                   const nass::AccessSessionRecord& record);
  TransportServiceClass class_of(const ResourceRequest& request, const ServicePolicy& policy,
                                 const QoSParameters& authorized) const;
  Outcome<ResourceGrant> reserve(const ResourceRequest& request, const QoSParameters& authorized,
                                 TransportServiceClass service_class,
                                 const nass::AccessSessionRecord& record,
                                 const ServicePolicy& policy);
  /// Throws RacsError(invalid_state) on a second commit.
  void commit(const std::string& grant_id);
  /// Throws RacsError(unknown_grant).
  void release(const std::string& grant_id, std::string_view cause = "request");
  AuthorizationToken issue_token(const ResourceRequest& request, const QoSParameters& authorized,
                                 const ServicePolicy& policy);

  /// Releases every grant bound to `address`; returns their session ids.
  std::vector<std::string> release_for_address(const std::string& address,
                                               std::string_view cause);

  /// Upstream: access then core. Downstream: core then access.
  std::vector<LinkRef> path(const nass::AccessSessionRecord& record, LinkDirection direction) const;
  std::vector<TrafficPolicy> derive_policies(const ResourceGrant& grant) const;

  const ResourceGrant* find_grant(std::string_view grant_id) const;
  const ResourceGrant* grant_for_session(std::string_view session_id) const;
  std::vector<ResourceGrant> grants() const;
  const AuthorizationToken* find_token(std::string_view token_id) const;

  const std::map<LinkRef, LinkCapacityModel>& links() const { return links_; }
  const LinkCapacityModel& link(const LinkRef& ref) const;
  bool capacity_invariants_hold() const;
  const RacsConfig& config() const { return config_; }

 private:
  struct TokenEntry {
    AuthorizationToken token;
    ResourceRequest request;
    ServicePolicy policy;
  };

  ResourceControlFunction& rcf_for(const nass::AccessSessionRecord& record);
  std::vector<Reservation> plan(const ResourceGrant& shape, const QoSParameters& qos) const;
  RacsResponse handle_reserve(const ResourceRequest& request);
  RacsResponse handle_authorize_only(const ResourceRequest& request);
  RacsResponse handle_modify(const ResourceRequest& request);
  RacsResponse handle_release(const ResourceRequest& request);
  Outcome<ResourceGrant> reserve_and_commit(const ResourceRequest& request, const QoSParameters& qos,
                                            const nass::AccessSessionRecord& record,
                                            const ServicePolicy& policy);
  void install(const ResourceGrant& grant);
  void uninstall(const ResourceGrant& grant);
  Json denial_event(const ResourceRequest& request, const Denial& d) const;

  RacsConfig config_;
  const nass::Nass* nass_;
  transport::EnforcementRegistry* enforcement_;
  EventLog* log_;
  const Scheduler* clock_;
  PolicyRepository repository_;
  std::map<LinkRef, LinkCapacityModel> links_;
  std::map<std::string, ResourceControlFunction, std::less<>> rcfs_;
  std::map<std::string, ResourceGrant, std::less<>> grants_;
  std::map<std::string, std::string, std::less<>> grant_by_session_;
  std::map<std::string, TokenEntry, std::less<>> tokens_;
  std::uint64_t next_grant_ = 1;
  std::uint64_t next_token_ = 1;
};

Json to_json(const ResourceGrant& g);
Json to_json(const std::vector<Reservation>& r);

}  // namespace ngnqos::racs
