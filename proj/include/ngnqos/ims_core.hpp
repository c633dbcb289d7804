#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ngnqos/core_model.hpp"
#include "ngnqos/event_log.hpp"
#include "ngnqos/nass.hpp"
#include "ngnqos/racs.hpp"
#include "ngnqos/scheduler.hpp"

namespace ngnqos::ims {

enum class SessionState : std::uint8_t {
  Idle,
  Authenticating,
  Triggering,
  ResourceRequested,
  Active,
  Renegotiating,
  Terminated,
  Rejected,
};

std::string_view to_string(SessionState s);
std::optional<SessionState> parse_session_state(std::string_view s);
bool is_legal_transition(SessionState from, SessionState to);
bool is_final(SessionState s);

enum class ScenarioMode : std::uint8_t { network_driven, token, device_driven };

std::string_view to_string(ScenarioMode m);
std::optional<ScenarioMode> parse_scenario_mode(std::string_view s);

enum class Initiator : std::uint8_t { user, network, service };

std::string_view to_string(Initiator i);
std::optional<Initiator> parse_initiator(std::string_view s);

/// Unset fields match anything.
struct TriggerRule {
  std::optional<std::string> service_id;
  std::optional<MediaType> media_type;
  std::string as_id;
  bool operator==(const TriggerRule&) const = default;
};

struct ServiceDescriptor {
  std::string service_id;
  MediaType media_type = MediaType::data;
  QoSParameters required_qos;
  TrafficPattern traffic_pattern;
  std::vector<TriggerRule> triggers;
  /// Remote endpoint of the service's media.
  std::string peer;
  /// Lowest acceptable operation point as a fraction of required bandwidth.
  double min_fraction = 0.4;

  bool operator==(const ServiceDescriptor&) const = default;

  QoSParameters minimum() const;
};

/// Application server logic reduced to a QoS rewrite: each set cap lowers
/// the matching request field. Requests are never raised.
struct ApplicationServer {
  std::string id;
  std::optional<std::int64_t> ul_bandwidth_cap;
  std::optional<std::int64_t> dl_bandwidth_cap;
  std::optional<int> priority_cap;

  bool operator==(const ApplicationServer&) const = default;

  QoSParameters invoke(const QoSParameters& requested) const;
};

struct ServiceLayerProfile {
  std::string subscriber_id;
  std::vector<std::string> public_identities;
  std::string credentials;
  std::vector<std::string> subscribed_services;
  std::vector<std::string> content_entitlements;
  /// Fields this model does not interpret, kept as given.
  Json extra = Json::object();

  bool operator==(const ServiceLayerProfile&) const = default;
};

/// Service-layer profile repository.
class Upsf {
 public:
  /// Throws std::invalid_argument on duplicates or invalid QoS.
  void add_service(ServiceDescriptor service);
  /// Throws std::invalid_argument on a duplicate subscriber or a reference
  /// to an unregistered service.
  void add_profile(ServiceLayerProfile profile);

  const ServiceLayerProfile* find_profile(std::string_view subscriber_id) const;
  const ServiceDescriptor* find_service(std::string_view service_id) const;
  const std::map<std::string, ServiceDescriptor, std::less<>>& services() const { return services_; }
  const std::map<std::string, ServiceLayerProfile, std::less<>>& profiles() const { return profiles_; }

 private:
  std::map<std::string, ServiceDescriptor, std::less<>> services_;
  std::map<std::string, ServiceLayerProfile, std::less<>> profiles_;
};

struct SessionRecord {
  std::string session_id;
  std::string subscriber_id;
  std::string service_id;
  SessionState state = SessionState::Idle;
  QoSParameters requested_qos;
  std::optional<QoSParameters> granted_qos;
  ScenarioMode mode = ScenarioMode::network_driven;
  std::optional<std::string> grant_ref;
  std::optional<racs::AuthorizationToken> token;

  std::string subscriber_ip;
  std::string peer_ip;
  /// Last granted operation point; survives termination.
  std::optional<QoSParameters> operation_point;
  std::vector<std::string> as_invocations;
  std::vector<SessionState> history;
  /// State in which the session was refused, and why.
  std::optional<SessionState> rejected_at;
  std::string rejection_reason;
  std::vector<racs::DenialReason> denials;
};

enum class ImsErrc {
  NotAttached,
  AuthFailed,
  NotRegistered,
  UnknownService,
  UnknownSession,
  InvalidState,
  NotActive,
};

std::string_view to_string(ImsErrc e);

class ImsError : public std::runtime_error {
 public:
  ImsError(ImsErrc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  ImsErrc code() const { return code_; }

 private:
  ImsErrc code_;
};

/// Control channel from the service layer (and devices) towards RACS.
class RacsPort {
 public:
  using Callback = std::function<void(const racs::RacsResponse&)>;
  virtual ~RacsPort() = default;

  virtual void submit(const racs::ResourceRequest& request, Callback done) = 0;
  virtual void redeem(const std::string& session_id, const std::string& token_id,
                      const QoSParameters& qos, Callback done) = 0;
  /// Releases take effect immediately.
  virtual racs::RacsResponse release(const racs::ResourceRequest& request) = 0;
  /// Drops any request or response still in flight for the session.
  virtual bool cancel(const std::string& session_id) = 0;
};

/// Synchronous port: RACS answers before submit returns.
class DirectRacsPort : public RacsPort {
 public:
  explicit DirectRacsPort(racs::Racs& racs) : racs_(&racs) {}
  void submit(const racs::ResourceRequest& request, Callback done) override;
  void redeem(const std::string& session_id, const std::string& token_id, const QoSParameters& qos,
              Callback done) override;
  racs::RacsResponse release(const racs::ResourceRequest& request) override;
  bool cancel(const std::string&) override { return false; }

 private:
  racs::Racs* racs_;
};

/// Port with a one-way signaling delay in each direction. Messages are
/// delivered through the scheduler even when the delay is zero.
class ScheduledRacsPort : public RacsPort {
 public:
  ScheduledRacsPort(racs::Racs& racs, Scheduler& clock, SimTime one_way_delay)
      : racs_(&racs), clock_(&clock), delay_(one_way_delay) {}

  void submit(const racs::ResourceRequest& request, Callback done) override;
  void redeem(const std::string& session_id, const std::string& token_id, const QoSParameters& qos,
              Callback done) override;
  racs::RacsResponse release(const racs::ResourceRequest& request) override;
  bool cancel(const std::string& session_id) override;

 private:
  void exchange(const std::string& session_id, std::function<racs::RacsResponse()> call, Callback done);

  racs::Racs* racs_;
  Scheduler* clock_;
  SimTime delay_;
  std::map<std::string, std::uint64_t, std::less<>> generation_;
  std::map<std::string, int, std::less<>> in_flight_;
};

struct ImsConfig {
  /// Time between token delivery and the device's reservation request.
  SimTime token_redeem_delay = 0;
};

struct Registration {
  std::string subscriber_id;
  std::string public_identity;
  SimTime registered_at = 0;
};

/// Call session control plus the service-layer side of the QoS procedure.
class ImsCore {
 public:
  ImsCore(Upsf upsf, std::vector<ApplicationServer> servers, const nass::Nass& nass, RacsPort& port,
          EventLog& log, Scheduler& clock, ImsConfig config = {});

  /// Throws ImsError(NotAttached | AuthFailed).
  Registration register_user(const std::string& subscriber_id, const std::string& credentials);
  bool is_registered(std::string_view subscriber_id) const;

  /// Creates the session and runs it as far as the control exchange allows.
  /// Throws ImsError(NotRegistered | UnknownService), std::invalid_argument
  /// for invalid QoS.
  const SessionRecord& initiate_session(const std::string& subscriber_id, const std::string& service_id,
                                        const QoSParameters& requested_qos, ScenarioMode mode,
                                        std::optional<std::string> peer = std::nullopt);

  bool authenticate_authorize(const std::string& session_id);
  std::vector<std::string> trigger_services(const std::string& session_id);
  /// Throws ImsError(NotAttached) when the NASS record has gone.
  racs::ResourceRequest build_resource_request(const std::string& session_id) const;
  const SessionRecord& finalize(const std::string& session_id, const racs::RacsResponse& response);

  /// Throws ImsError(NotActive).
  const SessionRecord& renegotiate(const std::string& session_id, const QoSParameters& new_qos,
                                   Initiator initiator);
  /// Throws ImsError(InvalidState).
  void terminate(const std::string& session_id);

  /// Transport detachment: sessions end without a separate release since
  /// RACS has already dropped the subscriber's grants.
  void handle_detach(const nass::AccessSessionRecord& record);

  const SessionRecord& session(std::string_view session_id) const;
  const std::map<std::string, SessionRecord, std::less<>>& sessions() const { return sessions_; }
  const Upsf& upsf() const { return upsf_; }

 private:
  SessionRecord& get(std::string_view session_id);
  void transition(SessionRecord& s, SessionState to);
  void reject(SessionRecord& s, std::string reason);
  void proceed(SessionRecord& s);
  void on_response(const std::string& session_id, const racs::RacsResponse& response);
  racs::ResourceRequest release_request(const SessionRecord& s) const;

  Upsf upsf_;
  std::map<std::string, ApplicationServer, std::less<>> servers_;
  const nass::Nass* nass_;
  RacsPort* port_;
  EventLog* log_;
  Scheduler* clock_;
  ImsConfig config_;
  std::map<std::string, Registration, std::less<>> registrations_;
  std::map<std::string, SessionRecord, std::less<>> sessions_;
  std::map<std::string, QoSParameters, std::less<>> rollback_;
  std::uint64_t next_session_ = 1;
};

Json to_json(const SessionRecord& s);

}  // namespace ngnqos::ims
