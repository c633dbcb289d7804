#include "ngnqos/racs.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>

#include "ngnqos/core_json.hpp"

namespace ngnqos::racs {

namespace {

constexpr std::array<std::pair<DenialReason, std::string_view>, 10> kDenialNames = {{
    {DenialReason::policy_violation, "policy_violation"},
    {DenialReason::exceeds_subscription, "exceeds_subscription"},
    {DenialReason::exceeds_priority, "exceeds_priority"},
    {DenialReason::insufficient_resources, "insufficient_resources"},
    {DenialReason::token_invalid, "token_invalid"},
    {DenialReason::token_expired, "token_expired"},
    {DenialReason::exceeds_authorization, "exceeds_authorization"},
    {DenialReason::unknown_grant, "unknown_grant"},
    {DenialReason::not_attached, "not_attached"},
    {DenialReason::invalid_request, "invalid_request"},
}};

bool glob(const std::string& pattern, const std::string& text) {
  return ::fnmatch(pattern.c_str(), text.c_str(), 0) == 0;
}

std::string sequence_id(char prefix, std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%06llu", prefix, static_cast<unsigned long long>(n));
  return buf;
}

Denial deny(DenialReason r, std::string detail = {}) { return Denial{r, std::move(detail)}; }

}  // namespace

std::string_view to_string(AdmissionMode m) {
  return m == AdmissionMode::enforced ? "enforced" : "unreserved";
}

std::optional<AdmissionMode> parse_admission_mode(std::string_view s) {
  if (s == "enforced") return AdmissionMode::enforced;
  if (s == "unreserved") return AdmissionMode::unreserved;
  return std::nullopt;
}

std::string_view to_string(RequestKind k) {
  switch (k) {
    case RequestKind::reserve: return "reserve";
    case RequestKind::authorize_only: return "authorize_only";
    case RequestKind::modify: return "modify";
    case RequestKind::release: return "release";
  }
  return "?";
}

std::string_view to_string(RequestOrigin o) {
  return o == RequestOrigin::service_layer ? "service_layer" : "device";
}

std::string_view to_string(DenialReason r) {
  for (const auto& [v, n] : kDenialNames)
    if (v == r) return n;
  return "?";
}

std::optional<DenialReason> parse_denial_reason(std::string_view s) {
  for (const auto& [v, n] : kDenialNames)
    if (n == s) return v;
  return std::nullopt;
}

Json to_json(const ResourceRequest& r) {
  return Json{{"session_id", r.session_id},
              {"subscriber_ip", r.subscriber_ip},
              {"peer_ip", r.peer_ip},
              {"media_type", r.media_type},
              {"traffic_pattern", r.traffic_pattern},
              {"qos", r.qos},
              {"floor", r.floor},
              {"requestor_name", r.requestor_name},
              {"kind", to_string(r.kind)},
              {"origin", to_string(r.origin)}};
}

Json to_json(const std::vector<Reservation>& rs) {
  Json j = Json::array();
  for (const auto& r : rs) j.push_back({{"link", r.link.str()}, {"amount", r.amount}});
  return j;
}

Json to_json(const ResourceGrant& g) {
  Json links = Json::array();
  for (const auto& l : g.links) links.push_back(l.str());
  return Json{{"grant_id", g.grant_id},
              {"session_id", g.session_id},
              {"qos", g.qos},
              {"class", g.service_class},
              {"links", links},
              {"reservations", to_json(g.reservations)},
              {"policy_id", g.policy_id},
              {"rcf", g.resource_control_function},
              {"admission", to_string(g.admission)},
              {"committed", g.committed}};
}

// ---------------------------------------------------------------------------

LinkCapacityModel::LinkCapacityModel(LinkRef link, std::int64_t capacity_kbps,
                                     std::map<TransportServiceClass, double> class_shares)
    : link_(std::move(link)), capacity_(capacity_kbps), shares_(std::move(class_shares)) {
  if (capacity_ <= 0) throw std::invalid_argument("link " + link_.str() + ": capacity must be positive");
  for (auto c : kAllClasses) {
    double s = shares_.count(c) ? shares_[c] : 0.0;
    if (!(s >= 0.0 && s <= 1.0))
      throw std::invalid_argument("link " + link_.str() + ": class share outside [0, 1]");
    shares_[c] = s;
    reserved_[c] = 0;
    peak_[c] = 0;
  }
}

double LinkCapacityModel::share(TransportServiceClass c) const { return shares_.at(c); }

std::int64_t LinkCapacityModel::limit(TransportServiceClass c) const {
  // The epsilon absorbs binary rounding in products such as 0.3 x 1000.
  return static_cast<std::int64_t>(std::floor(shares_.at(c) * static_cast<double>(capacity_) + 1e-9));
}

std::int64_t LinkCapacityModel::reserved(TransportServiceClass c) const { return reserved_.at(c); }

std::int64_t LinkCapacityModel::total_reserved() const {
  std::int64_t sum = 0;
  for (const auto& [c, r] : reserved_) sum += r;
  return sum;
}

std::int64_t LinkCapacityModel::peak(TransportServiceClass c) const { return peak_.at(c); }

bool LinkCapacityModel::admits(TransportServiceClass c, std::int64_t delta) const {
  std::int64_t next = reserved_.at(c) + delta;
  return next >= 0 && next <= limit(c) && total_reserved() + delta <= capacity_;
}

void LinkCapacityModel::apply(TransportServiceClass c, std::int64_t delta) {
  if (delta > 0 && !admits(c, delta))
    throw std::logic_error("reservation on " + link_.str() + " would exceed its limit");
  if (reserved_[c] + delta < 0)
    throw std::logic_error("reservation on " + link_.str() + " would become negative");
  reserved_[c] += delta;
  peak_[c] = std::max(peak_[c], reserved_[c]);
  peak_total_ = std::max(peak_total_, total_reserved());
}

bool LinkCapacityModel::invariants_hold() const {
  for (auto c : kAllClasses)
    if (reserved_.at(c) < 0 || reserved_.at(c) > limit(c)) return false;
  return total_reserved() <= capacity_;
}

// ---------------------------------------------------------------------------

PolicyRepository::PolicyRepository(std::vector<ServicePolicy> policies) {
  for (auto& p : policies) add(std::move(p));
}

void PolicyRepository::add(ServicePolicy policy) {
  for (const auto& p : policies_) {
    if (p.precedence == policy.precedence)
      throw std::invalid_argument("policies '" + p.policy_id + "' and '" + policy.policy_id +
                                  "' share precedence " + std::to_string(p.precedence));
    if (p.policy_id == policy.policy_id)
      throw std::invalid_argument("duplicate policy id '" + policy.policy_id + "'");
  }
  validate(policy.limits);
  if (policy.burst_ms <= 0) throw std::invalid_argument("policy '" + policy.policy_id + "': burst_ms must be positive");
  policies_.push_back(std::move(policy));
}

bool PolicyRepository::matches(const ServicePolicy& p, const ResourceRequest& req,
                               const nass::AccessSessionRecord& rec) {
  const auto& m = p.match;
  if (m.media_type && *m.media_type != req.media_type) return false;
  if (m.requestor_name && !glob(*m.requestor_name, req.requestor_name)) return false;
  if (m.access_network_type && *m.access_network_type != rec.access_network_type) return false;
  if (m.subscriber_pattern && !glob(*m.subscriber_pattern, rec.subscriber_id)) return false;
  return true;
}

ServicePolicy PolicyRepository::default_policy(const nass::AccessSessionRecord& rec) {
  ServicePolicy p;
  p.policy_id = "default";
  p.precedence = INT_MIN;
  p.limits.ul_bandwidth = rec.qos_profile.ul_subscribed_bandwidth;
  p.limits.dl_bandwidth = rec.qos_profile.dl_subscribed_bandwidth;
  p.limits.priority = kMaxPriority;
  return p;
}

ServicePolicy PolicyRepository::choose(const ResourceRequest& req,
                                       const nass::AccessSessionRecord& rec) const {
  const ServicePolicy* best = nullptr;
  for (const auto& p : policies_)
    if (matches(p, req, rec) && (!best || p.precedence > best->precedence)) best = &p;
  return best ? *best : default_policy(rec);
}

// ---------------------------------------------------------------------------

ResourceControlFunction::ResourceControlFunction(ResourceControlConfig config,
                                                 std::map<LinkRef, LinkCapacityModel>& links)
    : config_(std::move(config)), links_(&links) {}

bool ResourceControlFunction::serves(std::string_view type) const {
  const auto& t = config_.access_network_types;
  return std::find(t.begin(), t.end(), type) != t.end();
}

bool ResourceControlFunction::reserve(TransportServiceClass c, const std::vector<Reservation>& wanted) {
  return modify(c, {}, wanted);
}

bool ResourceControlFunction::modify(TransportServiceClass c, const std::vector<Reservation>& current,
                                     const std::vector<Reservation>& wanted) {
  std::map<LinkRef, std::int64_t> delta;
  for (const auto& r : current) delta[r.link] -= r.amount;
  for (const auto& r : wanted) delta[r.link] += r.amount;
  for (const auto& [link, d] : delta) {
    auto it = links_->find(link);
    if (it == links_->end()) throw RacsError(RacsErrc::configuration, "unknown link " + link.str());
    if (d > 0 && !it->second.admits(c, d)) return false;
  }
  // Decrements first so the total never transiently overshoots.
  for (const auto& [link, d] : delta)
    if (d < 0) links_->at(link).apply(c, d);
  for (const auto& [link, d] : delta)
    if (d > 0) links_->at(link).apply(c, d);
  return true;
}

void ResourceControlFunction::release(TransportServiceClass c, const std::vector<Reservation>& current) {
  modify(c, current, {});
}

// ---------------------------------------------------------------------------

Racs::Racs(RacsConfig config, const nass::Nass& nass, transport::EnforcementRegistry& enforcement,
           EventLog& log, const Scheduler& clock)
    : config_(std::move(config)),
      nass_(&nass),
      enforcement_(&enforcement),
      log_(&log),
      clock_(&clock),
      repository_(config_.policies) {
  for (const auto& l : config_.links) {
    for (auto dir : {LinkDirection::up, LinkDirection::down}) {
      LinkRef ref{l.id, dir};
      if (!links_.emplace(ref, LinkCapacityModel(ref, l.rate_kbps, l.class_shares)).second)
        throw RacsError(RacsErrc::configuration, "duplicate link '" + l.id + "'");
      enforcement_->at(ref);
    }
  }
  if (!links_.count(LinkRef{config_.core_link, LinkDirection::up}))
    throw RacsError(RacsErrc::configuration, "core link '" + config_.core_link + "' is not defined");
  for (const auto& r : config_.resource_control)
    if (!rcfs_.emplace(r.id, ResourceControlFunction(r, links_)).second)
      throw RacsError(RacsErrc::configuration, "duplicate resource control function '" + r.id + "'");
  for (const auto& n : nass.access_networks()) {
    auto it = rcfs_.find(n.racs_point_of_contact);
    if (it == rcfs_.end() || !it->second.serves(n.type))
      throw RacsError(RacsErrc::configuration,
                      "access network '" + n.id + "': point of contact '" + n.racs_point_of_contact +
                          "' is not a resource control function for type '" + n.type + "'");
    if (!links_.count(LinkRef{n.access_link, LinkDirection::up}))
      throw RacsError(RacsErrc::configuration,
                      "access network '" + n.id + "': unknown access link '" + n.access_link + "'");
  }
}

const LinkCapacityModel& Racs::link(const LinkRef& ref) const { return links_.at(ref); }

bool Racs::capacity_invariants_hold() const {
  return std::all_of(links_.begin(), links_.end(),
                     [](const auto& kv) { return kv.second.invariants_hold(); });
}

std::vector<LinkRef> Racs::path(const nass::AccessSessionRecord& record, LinkDirection dir) const {
  const auto& access = nass_->access_network(record.realm).access_link;
  if (dir == LinkDirection::up)
    return {LinkRef{access, LinkDirection::up}, LinkRef{config_.core_link, LinkDirection::up}};
  return {LinkRef{config_.core_link, LinkDirection::down}, LinkRef{access, LinkDirection::down}};
}

ResourceControlFunction& Racs::rcf_for(const nass::AccessSessionRecord& record) {
  auto it = rcfs_.find(record.racs_point_of_contact);
  if (it == rcfs_.end())
    throw RacsError(RacsErrc::configuration, "no resource control function '" + record.racs_point_of_contact + "'");
  return it->second;
}

ServicePolicy Racs::choose_policy(const ResourceRequest& request,
                                  const nass::AccessSessionRecord& record) const {
  return repository_.choose(request, record);
}

Outcome<QoSParameters> Racs::authorize(const ResourceRequest& request, const ServicePolicy& policy,
                                       const nass::AccessSessionRecord& record) {
  const QoSParameters& q = request.qos;
  const auto& profile = record.qos_profile;
  Outcome<QoSParameters> out = [&]() -> Outcome<QoSParameters> {
    if (request.kind == RequestKind::release) return deny(DenialReason::invalid_request, "release is not authorized");
    if (!is_valid(q)) return deny(DenialReason::invalid_request, "invalid QoS parameters");
    if (q.ul_bandwidth > profile.ul_subscribed_bandwidth || q.dl_bandwidth > profile.dl_subscribed_bandwidth)
      return deny(DenialReason::exceeds_subscription);
    if (q.priority > profile.maximum_priority) return deny(DenialReason::exceeds_priority);

    QoSParameters authorized = q;
    auto cap = [&](std::int64_t& value, std::int64_t limit, std::int64_t floor) {
      if (value <= limit) return true;
      if (limit < floor) return false;
      value = limit;
      return true;
    };
    if (!cap(authorized.ul_bandwidth, policy.limits.ul_bandwidth, request.floor.ul_bandwidth) ||
        !cap(authorized.dl_bandwidth, policy.limits.dl_bandwidth, request.floor.dl_bandwidth))
      return deny(DenialReason::policy_violation, "bandwidth cap below the minimum operation point");
    if (!satisfies(policy.limits, authorized)) return deny(DenialReason::policy_violation);
    return authorized;
  }();

  Json payload{{"session_id", request.session_id},
               {"kind", to_string(request.kind)},
               {"origin", to_string(request.origin)},
               {"policy_id", policy.policy_id},
               {"requested", request.qos}};
  if (auto* granted = std::get_if<QoSParameters>(&out)) {
    payload["result"] = "authorized";
    payload["authorized"] = *granted;
    payload["downgraded"] = !(*granted == request.qos);
  } else {
    payload["result"] = "refused";
    payload["reason"] = to_string(std::get<Denial>(out).reason);
  }
  log_->emit("racs.authorize", std::move(payload));
  return out;
}

TransportServiceClass Racs::class_of(const ResourceRequest& request, const ServicePolicy& policy,
                                     const QoSParameters& authorized) const {
  if (policy.class_override) return *policy.class_override;
  return config_.class_mapping.class_for(request.media_type, authorized.priority);
}

std::vector<Reservation> Racs::plan(const ResourceGrant& g, const QoSParameters& qos) const {
  const bool reserves =
      g.admission == AdmissionMode::enforced && g.service_class != TransportServiceClass::BE;
  std::vector<Reservation> out;
  for (const auto& l : g.links) {
    std::int64_t amount = l.direction == LinkDirection::up ? qos.ul_bandwidth : qos.dl_bandwidth;
    out.push_back(Reservation{l, reserves ? amount : 0});
  }
  return out;
}

Outcome<ResourceGrant> Racs::reserve(const ResourceRequest& request, const QoSParameters& authorized,
                                     TransportServiceClass service_class,
                                     const nass::AccessSessionRecord& record,
                                     const ServicePolicy& policy) {
  ResourceControlFunction& rcf = rcf_for(record);
  ResourceGrant g;
  g.session_id = request.session_id;
  g.subscriber_ip = request.subscriber_ip;
  g.peer_ip = request.peer_ip;
  g.qos = authorized;
  g.service_class = service_class;
  g.traffic_pattern = request.traffic_pattern;
  g.policy_id = policy.policy_id;
  g.resource_control_function = rcf.id();
  g.admission = policy.admission;
  g.burst_ms = policy.burst_ms;
  g.nat = policy.nat;
  if (request.traffic_pattern.carries_upstream())
    for (auto& l : path(record, LinkDirection::up)) g.links.push_back(l);
  if (request.traffic_pattern.carries_downstream())
    for (auto& l : path(record, LinkDirection::down)) g.links.push_back(l);
  g.reservations = plan(g, authorized);

  Json payload{{"session_id", request.session_id},
               {"class", service_class},
               {"rcf", rcf.id()},
               {"qos", authorized},
               {"admission", to_string(policy.admission)},
               {"reservations", to_json(g.reservations)}};
  if (!rcf.reserve(service_class, g.reservations)) {
    payload["result"] = "denied";
    payload["reason"] = to_string(DenialReason::insufficient_resources);
    log_->emit("racs.reserve", std::move(payload));
    return deny(DenialReason::insufficient_resources);
  }
  g.grant_id = sequence_id('G', next_grant_++);
  payload["result"] = "granted";
  payload["grant_id"] = g.grant_id;
  log_->emit("racs.reserve", std::move(payload));
  grant_by_session_[g.session_id] = g.grant_id;
  grants_.emplace(g.grant_id, g);
  return g;
}

std::vector<TrafficPolicy> Racs::derive_policies(const ResourceGrant& g) const {
  std::vector<TrafficPolicy> out;
  for (auto dir : {LinkDirection::up, LinkDirection::down}) {
    const bool present = std::any_of(g.links.begin(), g.links.end(),
                                     [&](const LinkRef& l) { return l.direction == dir; });
    const std::int64_t rate = dir == LinkDirection::up ? g.qos.ul_bandwidth : g.qos.dl_bandwidth;
    if (!present || rate <= 0) continue;
    TrafficPolicy p;
    p.flow_key = dir == LinkDirection::up ? FlowKey{g.subscriber_ip, g.peer_ip, g.session_id}
                                          : FlowKey{g.peer_ip, g.subscriber_ip, g.session_id};
    p.grant_id = g.grant_id;
    p.service_class = g.service_class;
    p.dscp = config_.dscp.dscp_for(g.service_class);
    p.gate = GateSetting{GateState::open, {p.flow_key.dst}};
    p.policer = PolicerSpec{rate, rate * g.burst_ms};  // kbit/s x ms = bit
    p.low_drop_precedence = g.service_class == TransportServiceClass::BE &&
                            config_.better_best_effort_min_priority &&
                            g.qos.priority >= *config_.better_best_effort_min_priority;
    p.nat = g.nat;
    out.push_back(std::move(p));
  }
  return out;
}

void Racs::install(const ResourceGrant& g) {
  for (const auto& p : derive_policies(g)) {
    const bool up = p.flow_key.src == g.subscriber_ip;
    for (const auto& l : g.links)
      if ((l.direction == LinkDirection::up) == up) enforcement_->at(l).install(p, clock_->now());
  }
}

void Racs::uninstall(const ResourceGrant& g) {
  const FlowKey up{g.subscriber_ip, g.peer_ip, g.session_id};
  const FlowKey down{g.peer_ip, g.subscriber_ip, g.session_id};
  for (const auto& l : g.links) enforcement_->at(l).remove(l.direction == LinkDirection::up ? up : down);
}

void Racs::commit(const std::string& grant_id) {
  auto it = grants_.find(grant_id);
  if (it == grants_.end()) throw RacsError(RacsErrc::unknown_grant, "unknown grant " + grant_id);
  ResourceGrant& g = it->second;
  if (g.committed) throw RacsError(RacsErrc::invalid_state, "grant " + grant_id + " already committed");
  install(g);
  g.committed = true;

  Json policies = Json::array();
  for (const auto& p : derive_policies(g)) {
    Json links = Json::array();
    const bool up = p.flow_key.src == g.subscriber_ip;
    for (const auto& l : g.links)
      if ((l.direction == LinkDirection::up) == up) links.push_back(l.str());
    Json entry{{"flow_key", p.flow_key.str()},
               {"dscp", p.dscp},
               {"gate", p.gate},
               {"rate_kbps", p.policer.rate_kbps},
               {"burst_bits", p.policer.burst_bits},
               {"links", links}};
    if (p.nat) entry["nat"] = *p.nat;
    policies.push_back(std::move(entry));
  }
  log_->emit("racs.commit", {{"session_id", g.session_id},
                             {"grant_id", g.grant_id},
                             {"class", g.service_class},
                             {"qos", g.qos},
                             {"policies", policies}});
}

void Racs::release(const std::string& grant_id, std::string_view cause) {
  auto it = grants_.find(grant_id);
  if (it == grants_.end()) throw RacsError(RacsErrc::unknown_grant, "unknown grant " + grant_id);
  ResourceGrant g = std::move(it->second);
  grants_.erase(it);
  grant_by_session_.erase(g.session_id);
  rcfs_.at(g.resource_control_function).release(g.service_class, g.reservations);
  uninstall(g);
  log_->emit("racs.release", {{"session_id", g.session_id},
                              {"grant_id", g.grant_id},
                              {"class", g.service_class},
                              {"cause", cause},
                              {"reservations", to_json(g.reservations)}});
}

AuthorizationToken Racs::issue_token(const ResourceRequest& request, const QoSParameters& authorized,
                                     const ServicePolicy& policy) {
  AuthorizationToken t;
  t.token_id = sequence_id('T', next_token_++);
  t.session_id = request.session_id;
  t.authorized_qos = authorized;
  t.expires_at = clock_->now() + config_.token_ttl;
  tokens_.emplace(t.token_id, TokenEntry{t, request, policy});
  log_->emit("racs.token", {{"session_id", t.session_id},
                            {"token_id", t.token_id},
                            {"action", "issued"},
                            {"authorized", authorized},
                            {"expires_at", t.expires_at}});
  return t;
}

const AuthorizationToken* Racs::find_token(std::string_view token_id) const {
  auto it = tokens_.find(token_id);
  return it == tokens_.end() ? nullptr : &it->second.token;
}

const ResourceGrant* Racs::find_grant(std::string_view grant_id) const {
  auto it = grants_.find(grant_id);
  return it == grants_.end() ? nullptr : &it->second;
}

const ResourceGrant* Racs::grant_for_session(std::string_view session_id) const {
  auto it = grant_by_session_.find(session_id);
  return it == grant_by_session_.end() ? nullptr : find_grant(it->second);
}

std::vector<ResourceGrant> Racs::grants() const {
  std::vector<ResourceGrant> out;
  for (const auto& [id, g] : grants_) out.push_back(g);
  return out;
}

Json Racs::denial_event(const ResourceRequest& request, const Denial& d) const {
  return Json{{"session_id", request.session_id},
              {"kind", to_string(request.kind)},
              {"result", "denied"},
              {"reason", to_string(d.reason)},
              {"detail", d.detail}};
}

Outcome<ResourceGrant> Racs::reserve_and_commit(const ResourceRequest& request, const QoSParameters& qos,
                                                const nass::AccessSessionRecord& record,
                                                const ServicePolicy& policy) {
  auto reserved = reserve(request, qos, class_of(request, policy, qos), record, policy);
  if (auto* g = std::get_if<ResourceGrant>(&reserved)) {
    commit(g->grant_id);
    return grants_.at(g->grant_id);
  }
  return reserved;
}

RacsResponse Racs::handle(const ResourceRequest& request) {
  switch (request.kind) {
    case RequestKind::reserve: return handle_reserve(request);
    case RequestKind::authorize_only: return handle_authorize_only(request);
    case RequestKind::modify: return handle_modify(request);
    case RequestKind::release: return handle_release(request);
  }
  throw std::logic_error("unreachable");
}

RacsResponse Racs::handle_reserve(const ResourceRequest& request) {
  RacsResponse resp{request.session_id, request.kind, Denial{}};
  if (grant_by_session_.count(request.session_id)) {
    resp.outcome = deny(DenialReason::invalid_request, "session already holds a grant");
    log_->emit("racs.reserve", denial_event(request, std::get<Denial>(resp.outcome)));
    return resp;
  }
  auto record = nass_->find_by_ip(request.subscriber_ip);
  if (!record) {
    resp.outcome = deny(DenialReason::not_attached, request.subscriber_ip);
    log_->emit("racs.authorize", denial_event(request, std::get<Denial>(resp.outcome)));
    return resp;
  }
  ServicePolicy policy = choose_policy(request, *record);
  auto authorized = authorize(request, policy, *record);
  if (auto* d = std::get_if<Denial>(&authorized)) {
    resp.outcome = *d;
    return resp;
  }
  auto result = reserve_and_commit(request, std::get<QoSParameters>(authorized), *record, policy);
  if (auto* g = std::get_if<ResourceGrant>(&result))
    resp.outcome = *g;
  else
    resp.outcome = std::get<Denial>(result);
  return resp;
}

RacsResponse Racs::handle_authorize_only(const ResourceRequest& request) {
  RacsResponse resp{request.session_id, request.kind, Denial{}};
  auto record = nass_->find_by_ip(request.subscriber_ip);
  if (!record) {
    resp.outcome = deny(DenialReason::not_attached, request.subscriber_ip);
    log_->emit("racs.authorize", denial_event(request, std::get<Denial>(resp.outcome)));
    return resp;
  }
  ServicePolicy policy = choose_policy(request, *record);
  auto authorized = authorize(request, policy, *record);
  if (auto* d = std::get_if<Denial>(&authorized)) {
    resp.outcome = *d;
    return resp;
  }
  resp.outcome = issue_token(request, std::get<QoSParameters>(authorized), policy);
  return resp;
}

RacsResponse Racs::redeem_token(const std::string& token_id, const QoSParameters& requested) {
  auto it = tokens_.find(token_id);
  auto reject = [&](DenialReason r, const std::string& session) {
    log_->emit("racs.token", {{"session_id", session},
                              {"token_id", token_id},
                              {"action", "rejected"},
                              {"reason", to_string(r)}});
    return RacsResponse{session, RequestKind::reserve, deny(r)};
  };
  if (it == tokens_.end()) return reject(DenialReason::token_invalid, "");
  TokenEntry& entry = it->second;
  const std::string& session = entry.token.session_id;
  if (entry.token.redeemed) return reject(DenialReason::token_invalid, session);
  if (clock_->now() >= entry.token.expires_at) return reject(DenialReason::token_expired, session);
  if (!satisfies(entry.token.authorized_qos, requested))
    return reject(DenialReason::exceeds_authorization, session);

  ResourceRequest req = entry.request;
  req.kind = RequestKind::reserve;
  req.qos = requested;
  RacsResponse resp{session, RequestKind::reserve, Denial{}};
  auto record = nass_->find_by_ip(req.subscriber_ip);
  if (!record) return reject(DenialReason::not_attached, session);
  if (grant_by_session_.count(session)) return reject(DenialReason::invalid_request, session);

  log_->emit("racs.token", {{"session_id", session}, {"token_id", token_id}, {"action", "redeemed"}});
  auto result = reserve_and_commit(req, requested, *record, entry.policy);
  if (auto* g = std::get_if<ResourceGrant>(&result)) {
    entry.token.redeemed = true;
    resp.outcome = *g;
  } else {
    resp.outcome = std::get<Denial>(result);
  }
  return resp;
}

RacsResponse Racs::handle_modify(const ResourceRequest& request) {
  RacsResponse resp{request.session_id, request.kind, Denial{}};
  auto git = grant_by_session_.find(request.session_id);
  if (git == grant_by_session_.end()) {
    resp.outcome = deny(DenialReason::unknown_grant);
    log_->emit("racs.modify", denial_event(request, std::get<Denial>(resp.outcome)));
    return resp;
  }
  ResourceGrant& g = grants_.at(git->second);
  auto record = nass_->find_by_ip(g.subscriber_ip);
  if (!record) {
    resp.outcome = deny(DenialReason::not_attached, g.subscriber_ip);
    log_->emit("racs.modify", denial_event(request, std::get<Denial>(resp.outcome)));
    return resp;
  }
  ServicePolicy policy = choose_policy(request, *record);
  auto authorized = authorize(request, policy, *record);
  if (auto* d = std::get_if<Denial>(&authorized)) {
    resp.outcome = *d;
    return resp;
  }
  const QoSParameters& qos = std::get<QoSParameters>(authorized);
  std::vector<Reservation> wanted = plan(g, qos);
  Json payload{{"session_id", g.session_id},
               {"grant_id", g.grant_id},
               {"class", g.service_class},
               {"qos", qos},
               {"old_reservations", to_json(g.reservations)},
               {"new_reservations", to_json(wanted)}};
  if (!rcfs_.at(g.resource_control_function).modify(g.service_class, g.reservations, wanted)) {
    payload["result"] = "denied";
    payload["reason"] = to_string(DenialReason::insufficient_resources);
    log_->emit("racs.modify", std::move(payload));
    resp.outcome = deny(DenialReason::insufficient_resources);
    return resp;
  }
  g.reservations = std::move(wanted);
  g.qos = qos;
  install(g);
  payload["result"] = "granted";
  log_->emit("racs.modify", std::move(payload));
  resp.outcome = g;
  return resp;
}

RacsResponse Racs::handle_release(const ResourceRequest& request) {
  RacsResponse resp{request.session_id, request.kind, Denial{}};
  auto git = grant_by_session_.find(request.session_id);
  if (git == grant_by_session_.end()) {
    resp.outcome = deny(DenialReason::unknown_grant);
    log_->emit("racs.release", denial_event(request, std::get<Denial>(resp.outcome)));
    return resp;
  }
  std::string grant_id = git->second;
  release(grant_id);
  resp.outcome = Released{grant_id};
  return resp;
}

std::vector<std::string> Racs::release_for_address(const std::string& address, std::string_view cause) {
  std::vector<std::string> ids;
  for (const auto& [id, g] : grants_)
    if (g.subscriber_ip == address) ids.push_back(id);
  std::vector<std::string> sessions;
  for (const auto& id : ids) {
    sessions.push_back(grants_.at(id).session_id);
    release(id, cause);
  }
  return sessions;
}

}  // namespace ngnqos::racs
