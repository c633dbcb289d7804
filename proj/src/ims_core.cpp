#include "ngnqos/ims_core.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "ngnqos/core_json.hpp"

namespace ngnqos::ims {

namespace {

constexpr std::array<std::pair<SessionState, std::string_view>, 8> kStateNames = {{
    {SessionState::Idle, "Idle"},
    {SessionState::Authenticating, "Authenticating"},
    {SessionState::Triggering, "Triggering"},
    {SessionState::ResourceRequested, "ResourceRequested"},
    {SessionState::Active, "Active"},
    {SessionState::Renegotiating, "Renegotiating"},
    {SessionState::Terminated, "Terminated"},
    {SessionState::Rejected, "Rejected"},
}};

}  // namespace

std::string_view to_string(SessionState s) {
  for (const auto& [v, n] : kStateNames)
    if (v == s) return n;
  return "?";
}

std::optional<SessionState> parse_session_state(std::string_view s) {
  for (const auto& [v, n] : kStateNames)
    if (n == s) return v;
  return std::nullopt;
}

bool is_legal_transition(SessionState from, SessionState to) {
  using S = SessionState;
  switch (from) {
    case S::Idle: return to == S::Authenticating;
    // refusal during authentication lands in Rejected
    case S::Authenticating: return to == S::Triggering || to == S::Rejected;
    case S::Triggering: return to == S::ResourceRequested;
    case S::ResourceRequested: return to == S::Active || to == S::Rejected;
    case S::Active: return to == S::Renegotiating || to == S::Terminated;
    case S::Renegotiating: return to == S::Active || to == S::Terminated;
    case S::Terminated:
    case S::Rejected: return false;
  }
  return false;
}

bool is_final(SessionState s) { return s == SessionState::Terminated || s == SessionState::Rejected; }

std::string_view to_string(ScenarioMode m) {
  switch (m) {
    case ScenarioMode::network_driven: return "network_driven";
    case ScenarioMode::token: return "token";
    case ScenarioMode::device_driven: return "device_driven";
  }
  return "?";
}

std::optional<ScenarioMode> parse_scenario_mode(std::string_view s) {
  for (auto m : {ScenarioMode::network_driven, ScenarioMode::token, ScenarioMode::device_driven})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

std::string_view to_string(Initiator i) {
  switch (i) {
    case Initiator::user: return "user";
    case Initiator::network: return "network";
    case Initiator::service: return "service";
  }
  return "?";
}

std::optional<Initiator> parse_initiator(std::string_view s) {
  for (auto i : {Initiator::user, Initiator::network, Initiator::service})
    if (to_string(i) == s) return i;
  return std::nullopt;
}

std::string_view to_string(ImsErrc e) {
  switch (e) {
    case ImsErrc::NotAttached: return "NotAttached";
    case ImsErrc::AuthFailed: return "AuthFailed";
    case ImsErrc::NotRegistered: return "NotRegistered";
    case ImsErrc::UnknownService: return "UnknownService";
    case ImsErrc::UnknownSession: return "UnknownSession";
    case ImsErrc::InvalidState: return "InvalidState";
    case ImsErrc::NotActive: return "NotActive";
  }
  return "?";
}

QoSParameters ServiceDescriptor::minimum() const {
  QoSParameters m = required_qos;
  m.ul_bandwidth = static_cast<std::int64_t>(static_cast<double>(required_qos.ul_bandwidth) * min_fraction);
  m.dl_bandwidth = static_cast<std::int64_t>(static_cast<double>(required_qos.dl_bandwidth) * min_fraction);
  return m;
}

QoSParameters ApplicationServer::invoke(const QoSParameters& requested) const {
  QoSParameters q = requested;
  if (ul_bandwidth_cap) q.ul_bandwidth = std::min(q.ul_bandwidth, *ul_bandwidth_cap);
  if (dl_bandwidth_cap) q.dl_bandwidth = std::min(q.dl_bandwidth, *dl_bandwidth_cap);
  if (priority_cap) q.priority = std::min(q.priority, *priority_cap);
  return q;
}

// ---------------------------------------------------------------------------

void Upsf::add_service(ServiceDescriptor service) {
  validate(service.required_qos);
  if (!service.traffic_pattern.is_valid())
    throw std::invalid_argument("service '" + service.service_id + "': invalid traffic pattern");
  if (!(service.min_fraction >= 0.0 && service.min_fraction <= 1.0))
    throw std::invalid_argument("service '" + service.service_id + "': min_fraction outside [0, 1]");
  const std::string id = service.service_id;
  if (!services_.emplace(id, std::move(service)).second)
    throw std::invalid_argument("duplicate service '" + id + "'");
}

void Upsf::add_profile(ServiceLayerProfile profile) {
  for (const auto& s : profile.subscribed_services)
    if (!services_.count(s))
      throw std::invalid_argument("profile '" + profile.subscriber_id + "' references unknown service '" + s + "'");
  const std::string id = profile.subscriber_id;
  if (!profiles_.emplace(id, std::move(profile)).second)
    throw std::invalid_argument("duplicate service-layer profile '" + id + "'");
}

const ServiceLayerProfile* Upsf::find_profile(std::string_view id) const {
  auto it = profiles_.find(id);
  return it == profiles_.end() ? nullptr : &it->second;
}

const ServiceDescriptor* Upsf::find_service(std::string_view id) const {
  auto it = services_.find(id);
  return it == services_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------

void DirectRacsPort::submit(const racs::ResourceRequest& request, Callback done) { done(racs_->handle(request)); }

void DirectRacsPort::redeem(const std::string&, const std::string& token_id, const QoSParameters& qos,
                            Callback done) {
  done(racs_->redeem_token(token_id, qos));
}

racs::RacsResponse DirectRacsPort::release(const racs::ResourceRequest& request) { return racs_->handle(request); }

void ScheduledRacsPort::exchange(const std::string& session_id, std::function<racs::RacsResponse()> call,
                                 Callback done) {
  const std::uint64_t gen = generation_[session_id];
  ++in_flight_[session_id];
  clock_->schedule_in(delay_, [this, session_id, gen, call = std::move(call), done = std::move(done)] {
    if (generation_[session_id] != gen) {
      --in_flight_[session_id];
      return;
    }
    racs::RacsResponse response = call();
    clock_->schedule_in(delay_, [this, session_id, gen, response, done] {
      --in_flight_[session_id];
      if (generation_[session_id] != gen) return;
      done(response);
    });
  });
}

void ScheduledRacsPort::submit(const racs::ResourceRequest& request, Callback done) {
  exchange(request.session_id, [this, request] { return racs_->handle(request); }, std::move(done));
}

void ScheduledRacsPort::redeem(const std::string& session_id, const std::string& token_id,
                               const QoSParameters& qos, Callback done) {
  exchange(session_id, [this, token_id, qos] { return racs_->redeem_token(token_id, qos); }, std::move(done));
}

racs::RacsResponse ScheduledRacsPort::release(const racs::ResourceRequest& request) {
  return racs_->handle(request);
}

bool ScheduledRacsPort::cancel(const std::string& session_id) {
  auto it = in_flight_.find(session_id);
  if (it == in_flight_.end() || it->second == 0) return false;
  ++generation_[session_id];
  return true;
}

// ---------------------------------------------------------------------------

ImsCore::ImsCore(Upsf upsf, std::vector<ApplicationServer> servers, const nass::Nass& nass, RacsPort& port,
                 EventLog& log, Scheduler& clock, ImsConfig config)
    : upsf_(std::move(upsf)), nass_(&nass), port_(&port), log_(&log), clock_(&clock), config_(config) {
  for (auto& as : servers) {
    const std::string id = as.id;
    if (!servers_.emplace(id, std::move(as)).second)
      throw std::invalid_argument("duplicate application server '" + id + "'");
  }
  for (const auto& [id, svc] : upsf_.services())
    for (const auto& t : svc.triggers)
      if (!servers_.count(t.as_id))
        throw std::invalid_argument("service '" + id + "' triggers unknown application server '" + t.as_id + "'");
}

Registration ImsCore::register_user(const std::string& subscriber_id, const std::string& credentials) {
  auto fail = [&](ImsErrc code, std::string_view why) {
    log_->emit("ims.register", {{"subscriber", subscriber_id}, {"result", "rejected"}, {"reason", why}});
    throw ImsError(code, subscriber_id);
  };
  if (!nass_->find_by_subscriber(subscriber_id)) fail(ImsErrc::NotAttached, "not_attached");
  const ServiceLayerProfile* profile = upsf_.find_profile(subscriber_id);
  if (!profile || profile->credentials != credentials) fail(ImsErrc::AuthFailed, "auth_failed");

  Registration r{subscriber_id,
                 profile->public_identities.empty() ? subscriber_id : profile->public_identities.front(),
                 clock_->now()};
  registrations_[subscriber_id] = r;
  log_->emit("ims.register", {{"subscriber", subscriber_id}, {"result", "registered"}, {"identity", r.public_identity}});
  return r;
}

bool ImsCore::is_registered(std::string_view subscriber_id) const {
  return registrations_.find(subscriber_id) != registrations_.end();
}

SessionRecord& ImsCore::get(std::string_view session_id) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ImsError(ImsErrc::UnknownSession, std::string(session_id));
  return it->second;
}

const SessionRecord& ImsCore::session(std::string_view session_id) const {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ImsError(ImsErrc::UnknownSession, std::string(session_id));
  return it->second;
}

void ImsCore::transition(SessionRecord& s, SessionState to) {
  if (!is_legal_transition(s.state, to))
    throw std::logic_error("illegal session transition " + std::string(to_string(s.state)) + " -> " +
                           std::string(to_string(to)));
  log_->emit("ims.session.state", {{"session_id", s.session_id}, {"from", to_string(s.state)}, {"to", to_string(to)}});
  s.state = to;
  s.history.push_back(to);
}

void ImsCore::reject(SessionRecord& s, std::string reason) {
  s.rejected_at = s.state;
  s.rejection_reason = std::move(reason);
  transition(s, SessionState::Rejected);
}

const SessionRecord& ImsCore::initiate_session(const std::string& subscriber_id, const std::string& service_id,
                                               const QoSParameters& requested_qos, ScenarioMode mode,
                                               std::optional<std::string> peer) {
  if (!is_registered(subscriber_id)) throw ImsError(ImsErrc::NotRegistered, subscriber_id);
  const ServiceDescriptor* service = upsf_.find_service(service_id);
  if (!service) throw ImsError(ImsErrc::UnknownService, service_id);
  validate(requested_qos);

  char id[16];
  std::snprintf(id, sizeof id, "S%06llu", static_cast<unsigned long long>(next_session_++));
  SessionRecord s;
  s.session_id = id;
  s.subscriber_id = subscriber_id;
  s.service_id = service_id;
  s.requested_qos = requested_qos;
  s.mode = mode;
  s.peer_ip = peer.value_or(service->peer);
  if (auto rec = nass_->find_by_subscriber(subscriber_id)) s.subscriber_ip = rec->ip_address;
  s.history.push_back(SessionState::Idle);
  log_->emit("ims.session.create", {{"session_id", s.session_id},
                                    {"subscriber", subscriber_id},
                                    {"service", service_id},
                                    {"mode", to_string(mode)},
                                    {"requested", requested_qos}});
  SessionRecord& rec = sessions_.emplace(s.session_id, std::move(s)).first->second;
  const std::string sid = rec.session_id;

  transition(rec, SessionState::Authenticating);
  if (!authenticate_authorize(sid)) return rec;
  trigger_services(sid);
  proceed(get(sid));
  return get(sid);
}

bool ImsCore::authenticate_authorize(const std::string& session_id) {
  SessionRecord& s = get(session_id);
  if (s.state != SessionState::Authenticating) throw ImsError(ImsErrc::InvalidState, session_id);
  const ServiceLayerProfile* profile = upsf_.find_profile(s.subscriber_id);
  std::string refusal;
  if (!profile)
    refusal = "unknown_subscriber";
  else if (!is_registered(s.subscriber_id))
    refusal = "not_registered";
  else if (s.mode != ScenarioMode::device_driven &&
           std::find(profile->subscribed_services.begin(), profile->subscribed_services.end(), s.service_id) ==
               profile->subscribed_services.end())
    refusal = "not_subscribed";
  if (!refusal.empty()) {
    log_->emit("ims.auth", {{"session_id", session_id}, {"result", "refused"}, {"reason", refusal}});
    reject(s, refusal);
    return false;
  }
  log_->emit("ims.auth", {{"session_id", session_id}, {"result", "ok"}});
  transition(s, SessionState::Triggering);
  return true;
}

std::vector<std::string> ImsCore::trigger_services(const std::string& session_id) {
  SessionRecord& s = get(session_id);
  if (s.state != SessionState::Triggering) throw ImsError(ImsErrc::InvalidState, session_id);
  const ServiceDescriptor& service = *upsf_.find_service(s.service_id);
  std::vector<std::string> invoked;
  // Devices requesting resources directly bypass service logic.
  if (s.mode != ScenarioMode::device_driven) {
    for (const auto& rule : service.triggers) {
      if (rule.service_id && *rule.service_id != s.service_id) continue;
      if (rule.media_type && *rule.media_type != service.media_type) continue;
      QoSParameters before = s.requested_qos;
      s.requested_qos = servers_.at(rule.as_id).invoke(before);
      invoked.push_back(rule.as_id);
      log_->emit("ims.trigger", {{"session_id", session_id},
                                 {"as", rule.as_id},
                                 {"before", before},
                                 {"after", s.requested_qos}});
    }
  }
  s.as_invocations = invoked;
  transition(s, SessionState::ResourceRequested);
  return invoked;
}

racs::ResourceRequest ImsCore::build_resource_request(const std::string& session_id) const {
  const SessionRecord& s = session(session_id);
  if (s.state != SessionState::ResourceRequested && s.state != SessionState::Renegotiating)
    throw ImsError(ImsErrc::InvalidState, session_id);
  auto record = nass_->find_by_subscriber(s.subscriber_id);
  if (!record) throw ImsError(ImsErrc::NotAttached, s.subscriber_id);
  const ServiceDescriptor& service = *upsf_.find_service(s.service_id);

  racs::ResourceRequest r;
  r.session_id = s.session_id;
  r.subscriber_ip = record->ip_address;
  r.peer_ip = s.peer_ip;
  r.media_type = service.media_type;
  r.traffic_pattern = service.traffic_pattern;
  r.qos = s.requested_qos;
  r.floor = s.requested_qos;
  const QoSParameters minimum = service.minimum();
  r.floor.ul_bandwidth = std::min(r.qos.ul_bandwidth, minimum.ul_bandwidth);
  r.floor.dl_bandwidth = std::min(r.qos.dl_bandwidth, minimum.dl_bandwidth);
  r.requestor_name = s.service_id;
  if (s.state == SessionState::Renegotiating)
    r.kind = racs::RequestKind::modify;
  else if (s.mode == ScenarioMode::token)
    r.kind = racs::RequestKind::authorize_only;
  else
    r.kind = racs::RequestKind::reserve;
  r.origin = s.mode == ScenarioMode::device_driven ? racs::RequestOrigin::device : racs::RequestOrigin::service_layer;
  return r;
}

void ImsCore::proceed(SessionRecord& s) {
  racs::ResourceRequest request;
  try {
    request = build_resource_request(s.session_id);
  } catch (const ImsError& e) {
    if (e.code() != ImsErrc::NotAttached) throw;
    if (s.state == SessionState::Renegotiating) {
      transition(s, SessionState::Active);
      return;
    }
    reject(s, "not_attached");
    return;
  }
  log_->emit("ims.request", {{"session_id", s.session_id}, {"request", racs::to_json(request)}});
  const std::string sid = s.session_id;
  port_->submit(request, [this, sid](const racs::RacsResponse& r) { on_response(sid, r); });
}

void ImsCore::on_response(const std::string& session_id, const racs::RacsResponse& response) {
  const SessionRecord& s = session(session_id);
  if (s.state != SessionState::ResourceRequested && s.state != SessionState::Renegotiating) {
    log_->emit("ims.stale", {{"session_id", session_id}, {"state", to_string(s.state)}});
    return;
  }
  finalize(session_id, response);
}

const SessionRecord& ImsCore::finalize(const std::string& session_id, const racs::RacsResponse& response) {
  SessionRecord& s = get(session_id);
  if (s.state != SessionState::ResourceRequested && s.state != SessionState::Renegotiating)
    throw ImsError(ImsErrc::InvalidState, session_id);
  const bool renegotiating = s.state == SessionState::Renegotiating;

  if (const auto* g = std::get_if<racs::ResourceGrant>(&response.outcome)) {
    s.granted_qos = g->qos;
    s.operation_point = g->qos;
    s.grant_ref = g->grant_id;
    rollback_.erase(session_id);
    log_->emit("ims.finalize", {{"session_id", session_id},
                                {"result", "granted"},
                                {"granted", g->qos},
                                {"downgraded", !(g->qos == s.requested_qos)}});
    transition(s, SessionState::Active);
    return s;
  }
  if (const auto* t = std::get_if<racs::AuthorizationToken>(&response.outcome)) {
    if (renegotiating || s.mode != ScenarioMode::token) throw std::logic_error("unexpected authorization token");
    s.token = *t;
    log_->emit("ims.finalize", {{"session_id", session_id}, {"result", "token"}, {"token_id", t->token_id}});
    auto redeem = [this, session_id] {
      const SessionRecord& cur = session(session_id);
      if (cur.state != SessionState::ResourceRequested || !cur.token) return;
      log_->emit("ims.token.redeem", {{"session_id", session_id}, {"token_id", cur.token->token_id}});
      port_->redeem(session_id, cur.token->token_id, cur.token->authorized_qos,
                    [this, session_id](const racs::RacsResponse& r) { on_response(session_id, r); });
    };
    if (config_.token_redeem_delay > 0)
      clock_->schedule_in(config_.token_redeem_delay, redeem);
    else
      redeem();
    return get(session_id);
  }
  if (const auto* d = std::get_if<racs::Denial>(&response.outcome)) {
    s.denials.push_back(d->reason);
    log_->emit("ims.finalize", {{"session_id", session_id},
                                {"result", renegotiating ? "rolled_back" : "rejected"},
                                {"reason", racs::to_string(d->reason)}});
    if (renegotiating) {
      s.granted_qos = rollback_.at(session_id);
      s.requested_qos = *s.granted_qos;
      rollback_.erase(session_id);
      transition(s, SessionState::Active);
    } else {
      reject(s, std::string(racs::to_string(d->reason)));
    }
    return s;
  }
  throw std::logic_error("unexpected RACS response for " + session_id);
}

const SessionRecord& ImsCore::renegotiate(const std::string& session_id, const QoSParameters& new_qos,
                                          Initiator initiator) {
  SessionRecord& s = get(session_id);
  if (s.state != SessionState::Active) throw ImsError(ImsErrc::NotActive, session_id);
  validate(new_qos);
  rollback_[session_id] = *s.granted_qos;
  log_->emit("ims.renegotiate", {{"session_id", session_id}, {"initiator", to_string(initiator)}, {"requested", new_qos}});
  s.requested_qos = new_qos;
  transition(s, SessionState::Renegotiating);
  proceed(s);
  return get(session_id);
}

racs::ResourceRequest ImsCore::release_request(const SessionRecord& s) const {
  racs::ResourceRequest r;
  r.session_id = s.session_id;
  r.subscriber_ip = s.subscriber_ip;
  r.peer_ip = s.peer_ip;
  r.requestor_name = s.service_id;
  r.kind = racs::RequestKind::release;
  return r;
}

void ImsCore::terminate(const std::string& session_id) {
  SessionRecord& s = get(session_id);
  if (s.state != SessionState::Active && s.state != SessionState::Renegotiating)
    throw ImsError(ImsErrc::InvalidState, session_id);
  if (s.state == SessionState::Renegotiating) {
    port_->cancel(session_id);
    rollback_.erase(session_id);
    log_->emit("ims.modify.cancel", {{"session_id", session_id}});
  }
  auto response = port_->release(release_request(s));
  log_->emit("ims.release", {{"session_id", session_id},
                             {"result", response.denial() ? racs::to_string(response.denial()->reason) : "released"}});
  s.granted_qos.reset();
  s.grant_ref.reset();
  transition(s, SessionState::Terminated);
}

void ImsCore::handle_detach(const nass::AccessSessionRecord& record) {
  registrations_.erase(record.subscriber_id);
  for (auto& [id, s] : sessions_) {
    if (s.subscriber_id != record.subscriber_id || is_final(s.state)) continue;
    port_->cancel(id);
    rollback_.erase(id);
    log_->emit("ims.detach", {{"session_id", id}, {"state", to_string(s.state)}});
    if (s.state == SessionState::Active || s.state == SessionState::Renegotiating) {
      s.granted_qos.reset();
      s.grant_ref.reset();
      transition(s, SessionState::Terminated);
    } else {
      reject(s, "not_attached");
    }
  }
}

Json to_json(const SessionRecord& s) {
  Json j{{"session_id", s.session_id},
         {"subscriber", s.subscriber_id},
         {"service", s.service_id},
         {"state", to_string(s.state)},
         {"mode", to_string(s.mode)},
         {"requested_qos", s.requested_qos},
         {"granted_qos", s.operation_point ? Json(*s.operation_point) : Json(nullptr)}};
  Json denials = Json::array();
  for (auto d : s.denials) denials.push_back(racs::to_string(d));
  j["denial_reasons"] = denials;
  if (s.rejected_at) {
    j["rejected_at"] = to_string(*s.rejected_at);
    j["rejection_reason"] = s.rejection_reason;
  }
  if (!s.as_invocations.empty()) j["as_invocations"] = s.as_invocations;
  return j;
}

}  // namespace ngnqos::ims
