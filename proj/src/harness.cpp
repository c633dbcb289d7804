#include "ngnqos/harness.hpp"

#include <cstdio>
#include <memory>

#include "ngnqos/core_json.hpp"
#include "ngnqos/enforcement.hpp"
#include "ngnqos/nass.hpp"
#include "ngnqos/racs.hpp"

namespace ngnqos::harness {

namespace {

using scenario::Action;
using scenario::ActionOp;
using scenario::Scenario;

std::vector<nass::Subscription> subscriptions(const Scenario& s) {
  std::vector<nass::Subscription> out;
  for (const auto& sub : s.subscribers)
    out.push_back({sub.id, sub.credentials, sub.qos_profile, sub.privacy_indicator, sub.location});
  return out;
}

racs::RacsConfig racs_config(const Scenario& s) {
  racs::RacsConfig c;
  c.links = s.links;
  c.core_link = s.core_link;
  c.resource_control = s.resource_control;
  c.policies = s.policies;
  c.class_mapping = s.class_map;
  c.dscp = s.dscp;
  c.token_ttl = s.token_ttl;
  c.better_best_effort_min_priority = s.better_best_effort_min_priority;
  return c;
}

ims::Upsf make_upsf(const Scenario& s) {
  ims::Upsf upsf;
  for (const auto& sv : s.services) upsf.add_service(sv);
  for (const auto& sub : s.subscribers) {
    auto profile = sub.service_profile;
    profile.subscriber_id = sub.id;
    upsf.add_profile(std::move(profile));
  }
  return upsf;
}

Json limits_json(const racs::LinkCapacityModel& m) {
  Json j = Json::object();
  for (auto c : kAllClasses)
    if (c != TransportServiceClass::BE) j[std::string(to_string(c))] = m.limit(c);
  return j;
}

/// Every module of one run, in construction order.
class World {
 public:
  World(const Scenario& s, const RunOptions& options)
      : scenario_(s),
        options_(options),
        seed_(options.seed.value_or(s.seed)),
        log_(clock_),
        nass_(s.access_networks, subscriptions(s), log_, clock_),
        racs_(racs_config(s), nass_, enforcement_, log_, clock_),
        port_(racs_, clock_, s.signaling_delay),
        ims_(make_upsf(s), s.application_servers, nass_, port_, log_, clock_, {s.token_redeem_delay}),
        sim_(s.links, enforcement_, clock_, log_, {s.queue_limit, options.trace_packets, seed_, s.duration}) {
    nass_.on_attach([this](const nass::AccessSessionRecord& r) {
      enforcement_.set_default_gate(r.ip_address, r.gate);
    });
    nass_.on_detach([this](const nass::AccessSessionRecord& r) {
      enforcement_.clear_default_gate(r.ip_address);
      racs_.release_for_address(r.ip_address, "detach");
      ims_.handle_detach(r);
    });
  }

  RunResult run() {
    emit_config();
    for (std::size_t i = 0; i < scenario_.actions.size(); ++i) {
      const Action* a = &scenario_.actions[i];
      clock_.schedule_at(a->at, [this, a, i] { execute(*a, i); });
    }
    flows_.resize(scenario_.sources.size());
    for (std::size_t i = 0; i < scenario_.sources.size(); ++i) {
      flows_[i].session = scenario_.sources[i].session;
      flows_[i].direction = scenario_.sources[i].direction;
      flows_[i].skip_reason = "not_started";
      clock_.schedule_at(scenario_.sources[i].start, [this, i] { start_source(i); });
    }
    if (scenario_.mos_feedback.enabled)
      for (SimTime t = 2 * kMicrosPerSecond; t <= scenario_.duration; t += kMicrosPerSecond)
        clock_.schedule_at(t, [this] { feedback(); });

    clock_.run_until(scenario_.duration);
    clock_.run();  // drain packets and signaling still in flight

    log_.emit("run.end", {{"generated", sim_.generated()},
                          {"delivered", sim_.delivered()},
                          {"dropped", sim_.dropped()},
                          {"capacity_invariants_hold", racs_.capacity_invariants_hold()}});
    return {report(), log_.events()};
  }

 private:
  void emit_config() {
    Json links = Json::array();
    for (const auto& [ref, model] : racs_.links())
      links.push_back({{"link", ref.str()}, {"capacity", model.capacity()}, {"limits", limits_json(model)}});
    Json payload = {{"scenario", scenario_.name},
                    {"seed", seed_},
                    {"duration_us", scenario_.duration},
                    {"signaling_delay_us", scenario_.signaling_delay},
                    {"links", links}};
    payload["mode_override"] =
        options_.mode_override ? Json(ims::to_string(*options_.mode_override)) : Json(nullptr);
    log_.emit("run.config", payload);
  }

  const scenario::SubscriberSpec& subscriber(const std::string& id) const {
    for (const auto& s : scenario_.subscribers)
      if (s.id == id) return s;
    throw std::invalid_argument("unknown subscriber '" + id + "'");
  }

  const std::string& session_for(const std::string& label) const {
    auto it = labels_.find(label);
    if (it == labels_.end()) throw std::runtime_error("session '" + label + "' was never created");
    return it->second;
  }

  void execute(const Action& a, std::size_t index) {
    Json p = {{"index", index}, {"op", scenario::to_string(a.op)}};
    if (!a.subscriber.empty()) p["subscriber"] = a.subscriber;
    if (!a.label.empty()) p["label"] = a.label;
    try {
      switch (a.op) {
        case ActionOp::attach: {
          const auto& sub = subscriber(a.subscriber);
          nass_.attach(a.subscriber, a.access_network, sub.terminal, a.credentials.value_or(sub.credentials));
          break;
        }
        case ActionOp::register_user:
          ims_.register_user(a.subscriber,
                             a.credentials.value_or(subscriber(a.subscriber).service_profile.credentials));
          break;
        case ActionOp::initiate: {
          const auto* service = ims_.upsf().find_service(a.service);
          QoSParameters qos = a.qos ? *a.qos : service ? service->required_qos : QoSParameters{};
          auto mode = options_.mode_override.value_or(a.mode.value_or(ims::ScenarioMode::network_driven));
          modes_[a.label] = mode;
          const auto& rec = ims_.initiate_session(a.subscriber, a.service, qos, mode, a.peer);
          labels_[a.label] = rec.session_id;
          p["session_id"] = rec.session_id;
          break;
        }
        case ActionOp::renegotiate:
          ims_.renegotiate(session_for(a.label), *a.qos, a.initiator);
          break;
        case ActionOp::terminate:
          ims_.terminate(session_for(a.label));
          break;
        case ActionOp::detach:
          nass_.detach(a.subscriber);
          break;
        case ActionOp::update_location:
          nass_.update_location(a.subscriber, a.location);
          break;
      }
      p["result"] = "ok";
    } catch (const ims::ImsError& e) {
      fail(a, p, std::string(ims::to_string(e.code())), e.what());
    } catch (const nass::NassError& e) {
      fail(a, p, std::string(nass::to_string(e.code())), e.what());
    } catch (const std::runtime_error& e) {
      fail(a, p, "failed", e.what());
    } catch (const std::invalid_argument& e) {
      fail(a, p, "invalid_argument", e.what());
    }
    log_.emit("scenario.action", p);
  }

  void fail(const Action& a, Json& p, const std::string& code, const std::string& detail) {
    p["result"] = "failed";
    p["error"] = code;
    p["detail"] = detail;
    if (a.op == ActionOp::initiate) initiate_errors_[a.label] = code;
  }

  void start_source(std::size_t i) {
    const auto& spec = scenario_.sources[i];
    auto& flow = flows_[i];
    Json p = {{"index", i}, {"session", spec.session}, {"direction", to_string(spec.direction)}};
    auto skip = [&](std::string reason) {
      flow.skip_reason = reason;
      p["result"] = "skipped";
      p["reason"] = std::move(reason);
      log_.emit("run.source", p);
    };
    auto it = labels_.find(spec.session);
    if (it == labels_.end()) return skip("no_session");
    const auto& session = ims_.session(it->second);
    auto record = nass_.find_by_subscriber(session.subscriber_id);
    if (!record) return skip("not_attached");

    transport::TrafficSource src;
    src.flow_key = spec.direction == LinkDirection::up
                       ? FlowKey{record->ip_address, session.peer_ip, session.session_id}
                       : FlowKey{session.peer_ip, record->ip_address, session.session_id};
    src.path = racs_.path(*record, spec.direction);
    src.model = spec.model;
    src.rate_kbps = spec.rate_kbps;
    src.packet_size = spec.packet_size;
    src.start = clock_.now();
    src.stop = spec.stop;
    src.on_mean = spec.on_mean;
    src.off_mean = spec.off_mean;
    sim_.add_source(src);

    flow.started = true;
    flow.skip_reason.clear();
    flow.measurements.flow_key = src.flow_key;
    p["result"] = "started";
    p["flow"] = src.flow_key.str();
    log_.emit("run.source", p);
  }

  /// Network-initiated renegotiation back to the service's required QoS when
  /// a completed second scores below the threshold.
  void feedback() {
    const std::size_t second = static_cast<std::size_t>(clock_.now() / kMicrosPerSecond) - 2;
    auto all = sim_.measurements(second + 1);
    for (const auto& flow : flows_) {
      if (!flow.started) continue;
      auto m = all.find(flow.measurements.flow_key);
      if (m == all.end() || m->second.seconds.size() <= second) continue;
      const auto& bin = m->second.seconds[second];
      if (!scenario_.mos_feedback.triggers(bin)) continue;
      const auto& session = ims_.session(labels_.at(flow.session));
      if (session.state != ims::SessionState::Active) continue;
      const auto* service = ims_.upsf().find_service(session.service_id);
      log_.emit("qoe.feedback", {{"session_id", session.session_id},
                                 {"flow", flow.measurements.flow_key.str()},
                                 {"second", second},
                                 {"mos", qoe::mos(bin.mean_delay_ms(), bin.jitter_ms(), bin.loss())}});
      if (session.granted_qos && *session.granted_qos != service->required_qos)
        ims_.renegotiate(session.session_id, service->required_qos, ims::Initiator::network);
    }
  }

  RunReport report() {
    RunReport r;
    r.scenario = scenario_.name;
    r.seed = seed_;
    r.mode_override = options_.mode_override;

    for (const auto& a : scenario_.actions) {
      if (a.op != ActionOp::initiate) continue;
      SessionOutcome o;
      o.label = a.label;
      o.subscriber = a.subscriber;
      o.service = a.service;
      o.mode = modes_.count(a.label) ? modes_.at(a.label) : a.mode.value_or(ims::ScenarioMode::network_driven);
      auto it = labels_.find(a.label);
      if (it == labels_.end()) {
        o.final_state = "NotCreated";
        o.error = initiate_errors_.count(a.label) ? initiate_errors_.at(a.label) : "not_run";
      } else {
        const auto& s = ims_.session(it->second);
        o.session_id = s.session_id;
        o.final_state = std::string(ims::to_string(s.state));
        o.granted_qos = s.operation_point;
        for (auto d : s.denials) o.denial_reasons.emplace_back(racs::to_string(d));
        if (s.rejected_at) o.rejected_at = std::string(ims::to_string(*s.rejected_at));
        o.rejection_reason = s.rejection_reason;
      }
      r.sessions.push_back(std::move(o));
    }

    const auto seconds = static_cast<std::size_t>((scenario_.duration + kMicrosPerSecond - 1) / kMicrosPerSecond);
    auto measured = sim_.measurements(seconds);
    for (auto flow : flows_) {
      if (flow.started) {
        auto it = measured.find(flow.measurements.flow_key);
        if (it != measured.end()) flow.measurements = it->second;
        flow.qoe = qoe::aggregate(flow.measurements);
      }
      r.flows.push_back(std::move(flow));
    }

    for (const auto& [ref, model] : racs_.links()) {
      LinkOutcome l;
      l.link = ref;
      l.capacity = model.capacity();
      for (auto c : kAllClasses) {
        if (c == TransportServiceClass::BE) continue;
        l.limit[c] = model.limit(c);
        l.peak[c] = model.peak(c);
      }
      l.peak_total = model.peak_total();
      r.links.push_back(std::move(l));
    }

    r.event_counts = log_.counts();
    r.log_digest = log_.digest();
    r.capacity_invariants_hold = racs_.capacity_invariants_hold();
    r.work_conservation_violations = sim_.work_conservation_violations();
    return r;
  }

  const Scenario& scenario_;
  RunOptions options_;
  std::uint64_t seed_;
  Scheduler clock_;
  EventLog log_;
  transport::EnforcementRegistry enforcement_;
  nass::Nass nass_;
  racs::Racs racs_;
  ims::ScheduledRacsPort port_;
  ims::ImsCore ims_;
  transport::TransportSim sim_;

  std::map<std::string, std::string> labels_;  // label -> session id
  std::map<std::string, ims::ScenarioMode> modes_;
  std::map<std::string, std::string> initiate_errors_;
  std::vector<FlowOutcome> flows_;
};

Json class_map_json(const std::map<TransportServiceClass, std::int64_t>& m) {
  Json j = Json::object();
  for (const auto& [c, v] : m) j[std::string(to_string(c))] = v;
  return j;
}

}  // namespace

Json to_json(const RunReport& r) {
  Json sessions = Json::array();
  for (const auto& s : r.sessions) {
    Json j = {{"label", s.label},
              {"session_id", s.session_id},
              {"subscriber", s.subscriber},
              {"service", s.service},
              {"mode", ims::to_string(s.mode)},
              {"final_state", s.final_state},
              {"granted_qos", s.granted_qos ? Json(*s.granted_qos) : Json(nullptr)},
              {"denial_reasons", s.denial_reasons},
              {"rejected_at", s.rejected_at ? Json(*s.rejected_at) : Json(nullptr)},
              {"rejection_reason", s.rejection_reason}};
    if (!s.error.empty()) j["error"] = s.error;
    sessions.push_back(j);
  }
  Json flows = Json::array();
  for (const auto& f : r.flows) {
    Json j = {{"session", f.session}, {"direction", to_string(f.direction)}, {"started", f.started}};
    if (f.started) {
      j["measurements"] = transport::to_json(f.measurements);
      j["qoe"] = f.qoe ? qoe::to_json(*f.qoe) : Json(nullptr);
    } else {
      j["skip_reason"] = f.skip_reason;
    }
    flows.push_back(j);
  }
  Json links = Json::array();
  for (const auto& l : r.links)
    links.push_back({{"link", l.link.str()},
                     {"capacity", l.capacity},
                     {"limit", class_map_json(l.limit)},
                     {"peak", class_map_json(l.peak)},
                     {"peak_total", l.peak_total}});
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(r.log_digest));
  return {{"scenario", r.scenario},
          {"seed", r.seed},
          {"mode_override", r.mode_override ? Json(ims::to_string(*r.mode_override)) : Json(nullptr)},
          {"sessions", sessions},
          {"flows", flows},
          {"links", links},
          {"event_counts", r.event_counts},
          {"log_digest", digest},
          {"capacity_invariants_hold", r.capacity_invariants_hold},
          {"work_conservation_violations", r.work_conservation_violations}};
}

Json granted_qos_map(const RunReport& r) {
  Json j = Json::object();
  for (const auto& s : r.sessions) j[s.label] = s.granted_qos ? Json(*s.granted_qos) : Json(nullptr);
  return j;
}

RunResult run_end_to_end(const Scenario& s, const RunOptions& options) {
  auto errors = scenario::validate(s);
  if (!errors.empty()) throw std::invalid_argument(scenario::ScenarioError(errors).what());
  World world(s, options);
  return world.run();
}

}  // namespace ngnqos::harness
