#include "ngnqos/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ngnqos/core_json.hpp"

namespace ngnqos::scenario {

namespace {

constexpr std::string_view kOpNames[] = {"attach",    "register", "initiate",       "renegotiate",
                                         "terminate", "detach",   "update_location"};

std::string strip_json_prefix(std::string what) {
  // "[json.exception.type_error.302] type must be ..." -> "type must be ..."
  if (!what.empty() && what.front() == '[') {
    auto close = what.find("] ");
    if (close != std::string::npos) what.erase(0, close + 2);
  }
  return what;
}

/// Collects field errors while walking the document.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& message) {
    errors.push_back(path + ": " + message);
  }

  /// False (with an error) unless `j` is an object; unknown keys are errors.
  bool object(const Json& j, const std::string& path, std::initializer_list<std::string_view> known,
              bool open = false) {
    if (!j.is_object()) {
      fail(path, std::string("expected an object, got ") + j.type_name());
      return false;
    }
    if (open) return true;
    for (const auto& [key, value] : j.items()) {
      bool ok = false;
      for (auto k : known) ok = ok || k == key;
      if (!ok) fail(at(path, key), "unknown field");
    }
    return true;
  }

  /// Converts `obj[key]` with the json library's rules.
  template <typename T>
  bool get(const Json& obj, std::string_view key, const std::string& path, T& out, bool required = false) {
    const Json* v = find(obj, key, path, required);
    if (!v) return false;
    try {
      out = v->get<T>();
      return true;
    } catch (const std::exception& e) {
      fail(at(path, key), strip_json_prefix(e.what()));
      return false;
    }
  }

  template <typename T>
  void get_optional(const Json& obj, std::string_view key, const std::string& path, std::optional<T>& out) {
    T value{};
    if (obj.contains(std::string(key)) && !obj.at(std::string(key)).is_null() && get(obj, key, path, value))
      out = value;
  }

  /// Enum field via a parse function returning std::optional.
  template <typename T, typename Parse>
  bool name(const Json& obj, std::string_view key, const std::string& path, T& out, Parse parse,
            bool required = false) {
    std::string text;
    if (!get(obj, key, path, text, required)) return false;
    auto v = parse(text);
    if (!v) {
      fail(at(path, key), "unknown value '" + text + "'");
      return false;
    }
    out = *v;
    return true;
  }

  /// Non-negative duration given in `unit` microseconds per step (ms or s).
  bool time(const Json& obj, std::string_view key, const std::string& path, SimTime& out, SimTime unit,
            bool required = false) {
    double v = 0;
    if (!get(obj, key, path, v, required)) return false;
    if (!std::isfinite(v) || v < 0) {
      fail(at(path, key), "must be a non-negative number");
      return false;
    }
    out = static_cast<SimTime>(std::llround(v * static_cast<double>(unit)));
    return true;
  }

  /// Runs a throwing converter and records its message.
  template <typename F>
  bool guarded(const std::string& path, F&& f) {
    try {
      f();
      return true;
    } catch (const std::exception& e) {
      fail(path, strip_json_prefix(e.what()));
      return false;
    }
  }

  static std::string at(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }
  static std::string index(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
  }

 private:
  const Json* find(const Json& obj, std::string_view key, const std::string& path, bool required) {
    auto it = obj.find(std::string(key));
    if (it == obj.end() || it->is_null()) {
      if (required) fail(at(path, key), "missing required field");
      return nullptr;
    }
    return &*it;
  }
};

/// Calls `each(element, path)` for every element of the array at `key`.
template <typename F>
void for_array(Reader& r, const Json& obj, std::string_view key, const std::string& path, F&& each,
               bool required = false) {
  auto it = obj.find(std::string(key));
  const std::string here = Reader::at(path, key);
  if (it == obj.end() || it->is_null()) {
    if (required) r.fail(here, "missing required field");
    return;
  }
  if (!it->is_array()) {
    r.fail(here, std::string("expected an array, got ") + it->type_name());
    return;
  }
  for (std::size_t i = 0; i < it->size(); ++i) each((*it)[i], Reader::index(here, i));
}

Json time_json(SimTime us, SimTime unit) {
  if (us % unit == 0) return us / unit;
  return static_cast<double>(us) / static_cast<double>(unit);
}

// -- readers ----------------------------------------------------------------

void read_qos(Reader& r, const Json& obj, std::string_view key, const std::string& path, QoSParameters& out,
              bool required = false) {
  auto it = obj.find(std::string(key));
  if (it == obj.end() || it->is_null()) {
    if (required) r.fail(Reader::at(path, key), "missing required field");
    return;
  }
  r.guarded(Reader::at(path, key), [&] { out = it->get<QoSParameters>(); });
}

LinkConfig read_link(Reader& r, const Json& j, const std::string& path) {
  LinkConfig l;
  if (!r.object(j, path, {"id", "rate_kbps", "delay_ms", "class_shares"})) return l;
  r.get(j, "id", path, l.id, true);
  r.get(j, "rate_kbps", path, l.rate_kbps, true);
  r.time(j, "delay_ms", path, l.propagation_delay, kMicrosPerMilli);
  l.class_shares = LinkConfig::default_shares();
  if (j.contains("class_shares")) {
    const auto& shares = j["class_shares"];
    const std::string sp = Reader::at(path, "class_shares");
    if (r.object(shares, sp, {}, true)) {
      l.class_shares.clear();
      for (const auto& [name, value] : shares.items()) {
        auto c = parse_service_class(name);
        if (!c) {
          r.fail(Reader::at(sp, name), "unknown transport service class");
          continue;
        }
        double v = 0;
        if (r.get(shares, name, sp, v)) l.class_shares[*c] = v;
      }
    }
  }
  return l;
}

nass::TerminalProfile read_terminal(Reader& r, const Json& j, const std::string& path) {
  nass::TerminalProfile t = default_terminal();
  if (!r.object(j, path, {"hardware", "connectivity", "software", "user_preferences"})) return t;
  if (j.contains("hardware")) {
    const auto& h = j["hardware"];
    const std::string p = Reader::at(path, "hardware");
    if (r.object(h, p, {"model", "display", "cpu_mem", "sound"})) {
      r.get(h, "model", p, t.hardware.model);
      r.get(h, "display", p, t.hardware.display);
      r.get(h, "cpu_mem", p, t.hardware.cpu_mem);
      r.get(h, "sound", p, t.hardware.sound);
    }
  }
  if (j.contains("connectivity")) {
    const auto& c = j["connectivity"];
    const std::string p = Reader::at(path, "connectivity");
    if (r.object(c, p, {"supported_interfaces", "current_interface", "dl_capability", "ul_capability"})) {
      r.get(c, "supported_interfaces", p, t.connectivity.supported_interfaces);
      r.get(c, "current_interface", p, t.connectivity.current_interface);
      r.get(c, "dl_capability", p, t.connectivity.dl_capability);
      r.get(c, "ul_capability", p, t.connectivity.ul_capability);
    }
  }
  if (j.contains("software")) {
    const auto& s = j["software"];
    const std::string p = Reader::at(path, "software");
    if (r.object(s, p, {"os", "browser", "media_types", "content_protection"})) {
      r.get(s, "os", p, t.software.os);
      r.get(s, "browser", p, t.software.browser);
      r.get(s, "media_types", p, t.software.media_types);
      r.get(s, "content_protection", p, t.software.content_protection);
    }
  }
  if (j.contains("user_preferences")) {
    const auto& u = j["user_preferences"];
    const std::string p = Reader::at(path, "user_preferences");
    if (r.object(u, p, {"desired_quality", "budget_limit", "time_constraint_s"})) {
      read_qos(r, u, "desired_quality", p, t.user_preferences.desired_quality);
      r.get_optional(u, "budget_limit", p, t.user_preferences.budget_limit);
      r.get_optional(u, "time_constraint_s", p, t.user_preferences.time_constraint);
    }
  }
  return t;
}

nass::TransportQoSProfile read_transport_profile(Reader& r, const Json& j, const std::string& path) {
  nass::TransportQoSProfile p;
  if (!r.object(j, path,
                {"transport_service_class", "requestor_name", "media_type", "maximum_priority",
                 "ul_subscribed_bandwidth", "dl_subscribed_bandwidth", "ul_default_bandwidth",
                 "dl_default_bandwidth", "initial_gate"}))
    return p;
  r.get(j, "transport_service_class", path, p.transport_service_class);
  r.get(j, "requestor_name", path, p.requestor_name);
  r.get(j, "media_type", path, p.media_type);
  r.get(j, "maximum_priority", path, p.maximum_priority);
  r.get(j, "ul_subscribed_bandwidth", path, p.ul_subscribed_bandwidth);
  r.get(j, "dl_subscribed_bandwidth", path, p.dl_subscribed_bandwidth);
  r.get(j, "ul_default_bandwidth", path, p.ul_default_bandwidth);
  r.get(j, "dl_default_bandwidth", path, p.dl_default_bandwidth);
  r.get(j, "initial_gate", path, p.initial_gate);
  return p;
}

ims::ServiceLayerProfile read_service_profile(Reader& r, const Json& j, const std::string& path) {
  ims::ServiceLayerProfile p;
  if (!r.object(j, path, {}, true)) return p;
  for (const auto& [key, value] : j.items()) {
    if (key == "public_identities")
      r.get(j, key, path, p.public_identities);
    else if (key == "credentials")
      r.get(j, key, path, p.credentials);
    else if (key == "subscribed_services")
      r.get(j, key, path, p.subscribed_services);
    else if (key == "content_entitlements")
      r.get(j, key, path, p.content_entitlements);
    else
      p.extra[key] = value;
  }
  return p;
}

SubscriberSpec read_subscriber(Reader& r, const Json& j, const std::string& path) {
  SubscriberSpec s;
  s.terminal = default_terminal();
  if (!r.object(j, path,
                {"id", "credentials", "qos_profile", "privacy_indicator", "location", "service_profile",
                 "terminal"}))
    return s;
  r.get(j, "id", path, s.id, true);
  r.get(j, "credentials", path, s.credentials);
  r.get(j, "privacy_indicator", path, s.privacy_indicator);
  r.get(j, "location", path, s.location);
  if (j.contains("qos_profile"))
    s.qos_profile = read_transport_profile(r, j["qos_profile"], Reader::at(path, "qos_profile"));
  else
    r.fail(Reader::at(path, "qos_profile"), "missing required field");
  if (j.contains("service_profile"))
    s.service_profile = read_service_profile(r, j["service_profile"], Reader::at(path, "service_profile"));
  if (j.contains("terminal")) s.terminal = read_terminal(r, j["terminal"], Reader::at(path, "terminal"));
  s.service_profile.subscriber_id = s.id;
  return s;
}

ims::ApplicationServer read_server(Reader& r, const Json& j, const std::string& path) {
  ims::ApplicationServer a;
  if (!r.object(j, path, {"id", "ul_bandwidth_cap", "dl_bandwidth_cap", "priority_cap"})) return a;
  r.get(j, "id", path, a.id, true);
  r.get_optional(j, "ul_bandwidth_cap", path, a.ul_bandwidth_cap);
  r.get_optional(j, "dl_bandwidth_cap", path, a.dl_bandwidth_cap);
  r.get_optional(j, "priority_cap", path, a.priority_cap);
  return a;
}

ims::ServiceDescriptor read_service(Reader& r, const Json& j, const std::string& path) {
  ims::ServiceDescriptor s;
  if (!r.object(j, path,
                {"id", "media_type", "required_qos", "traffic_pattern", "triggers", "peer", "min_fraction"}))
    return s;
  r.get(j, "id", path, s.service_id, true);
  r.get(j, "media_type", path, s.media_type, true);
  read_qos(r, j, "required_qos", path, s.required_qos, true);
  r.get(j, "traffic_pattern", path, s.traffic_pattern);
  r.get(j, "peer", path, s.peer, true);
  r.get(j, "min_fraction", path, s.min_fraction);
  for_array(r, j, "triggers", path, [&](const Json& t, const std::string& tp) {
    ims::TriggerRule rule;
    if (!r.object(t, tp, {"service_id", "media_type", "as"})) return;
    r.get_optional(t, "service_id", tp, rule.service_id);
    r.get_optional(t, "media_type", tp, rule.media_type);
    r.get(t, "as", tp, rule.as_id, true);
    s.triggers.push_back(std::move(rule));
  });
  return s;
}

racs::ServicePolicy read_policy(Reader& r, const Json& j, const std::string& path) {
  racs::ServicePolicy p;
  if (!r.object(j, path,
                {"id", "match", "limits", "class_override", "precedence", "admission", "burst_ms", "nat"}))
    return p;
  r.get(j, "id", path, p.policy_id, true);
  if (j.contains("match")) {
    const auto& m = j["match"];
    const std::string mp = Reader::at(path, "match");
    if (r.object(m, mp, {"media_type", "requestor_name", "access_network_type", "subscriber_pattern"})) {
      r.get_optional(m, "media_type", mp, p.match.media_type);
      r.get_optional(m, "requestor_name", mp, p.match.requestor_name);
      r.get_optional(m, "access_network_type", mp, p.match.access_network_type);
      r.get_optional(m, "subscriber_pattern", mp, p.match.subscriber_pattern);
    }
  }
  read_qos(r, j, "limits", path, p.limits, true);
  r.get_optional(j, "class_override", path, p.class_override);
  r.get(j, "precedence", path, p.precedence, true);
  r.name(j, "admission", path, p.admission, racs::parse_admission_mode);
  r.get(j, "burst_ms", path, p.burst_ms);
  r.get_optional(j, "nat", path, p.nat);
  return p;
}

Action read_action(Reader& r, const Json& j, const std::string& path) {
  Action a;
  if (!r.object(j, path,
                {"at_ms", "op", "subscriber", "access_network", "credentials", "label", "service", "mode", "qos",
                 "peer", "initiator", "location"}))
    return a;
  r.time(j, "at_ms", path, a.at, kMicrosPerMilli, true);
  r.name(j, "op", path, a.op, parse_action_op, true);
  r.get(j, "subscriber", path, a.subscriber);
  r.get(j, "access_network", path, a.access_network);
  r.get_optional(j, "credentials", path, a.credentials);
  r.get(j, "label", path, a.label);
  r.get(j, "service", path, a.service);
  ims::ScenarioMode mode{};
  if (r.name(j, "mode", path, mode, ims::parse_scenario_mode)) a.mode = mode;
  if (j.contains("qos") && !j["qos"].is_null()) {
    QoSParameters q;
    if (r.guarded(Reader::at(path, "qos"), [&] { q = j["qos"].get<QoSParameters>(); })) a.qos = q;
  }
  r.get_optional(j, "peer", path, a.peer);
  r.name(j, "initiator", path, a.initiator, ims::parse_initiator);
  r.get(j, "location", path, a.location);
  return a;
}

SourceSpec read_source(Reader& r, const Json& j, const std::string& path) {
  SourceSpec s;
  if (!r.object(j, path,
                {"session", "direction", "model", "rate_kbps", "packet_size", "start_ms", "stop_ms", "on_ms",
                 "off_ms"}))
    return s;
  r.get(j, "session", path, s.session, true);
  r.name(j, "direction", path, s.direction, [](std::string_view d) -> std::optional<LinkDirection> {
    if (d == "up") return LinkDirection::up;
    if (d == "down") return LinkDirection::down;
    return std::nullopt;
  }, true);
  r.name(j, "model", path, s.model, transport::parse_source_model);
  r.get(j, "rate_kbps", path, s.rate_kbps, true);
  r.get(j, "packet_size", path, s.packet_size, true);
  r.time(j, "start_ms", path, s.start, kMicrosPerMilli);
  r.time(j, "stop_ms", path, s.stop, kMicrosPerMilli, true);
  r.time(j, "on_ms", path, s.on_mean, kMicrosPerMilli);
  r.time(j, "off_ms", path, s.off_mean, kMicrosPerMilli);
  return s;
}

// -- writers ----------------------------------------------------------------

Json write_terminal(const nass::TerminalProfile& t) {
  Json prefs = {{"desired_quality", t.user_preferences.desired_quality}};
  if (t.user_preferences.budget_limit) prefs["budget_limit"] = *t.user_preferences.budget_limit;
  if (t.user_preferences.time_constraint) prefs["time_constraint_s"] = *t.user_preferences.time_constraint;
  return {
      {"hardware",
       {{"model", t.hardware.model},
        {"display", t.hardware.display},
        {"cpu_mem", t.hardware.cpu_mem},
        {"sound", t.hardware.sound}}},
      {"connectivity",
       {{"supported_interfaces", t.connectivity.supported_interfaces},
        {"current_interface", t.connectivity.current_interface},
        {"dl_capability", t.connectivity.dl_capability},
        {"ul_capability", t.connectivity.ul_capability}}},
      {"software",
       {{"os", t.software.os},
        {"browser", t.software.browser},
        {"media_types", t.software.media_types},
        {"content_protection", t.software.content_protection}}},
      {"user_preferences", prefs},
  };
}

Json write_subscriber(const SubscriberSpec& s) {
  const auto& p = s.qos_profile;
  Json service = s.service_profile.extra.is_object() ? s.service_profile.extra : Json::object();
  service["public_identities"] = s.service_profile.public_identities;
  service["credentials"] = s.service_profile.credentials;
  service["subscribed_services"] = s.service_profile.subscribed_services;
  service["content_entitlements"] = s.service_profile.content_entitlements;
  return {
      {"id", s.id},
      {"credentials", s.credentials},
      {"privacy_indicator", s.privacy_indicator},
      {"location", s.location},
      {"qos_profile",
       {{"transport_service_class", p.transport_service_class},
        {"requestor_name", p.requestor_name},
        {"media_type", p.media_type},
        {"maximum_priority", p.maximum_priority},
        {"ul_subscribed_bandwidth", p.ul_subscribed_bandwidth},
        {"dl_subscribed_bandwidth", p.dl_subscribed_bandwidth},
        {"ul_default_bandwidth", p.ul_default_bandwidth},
        {"dl_default_bandwidth", p.dl_default_bandwidth},
        {"initial_gate", p.initial_gate}}},
      {"service_profile", service},
      {"terminal", write_terminal(s.terminal)},
  };
}

Json write_service(const ims::ServiceDescriptor& s) {
  Json triggers = Json::array();
  for (const auto& t : s.triggers) {
    Json tj = {{"as", t.as_id}};
    if (t.service_id) tj["service_id"] = *t.service_id;
    if (t.media_type) tj["media_type"] = *t.media_type;
    triggers.push_back(tj);
  }
  return {{"id", s.service_id},           {"media_type", s.media_type}, {"required_qos", s.required_qos},
          {"traffic_pattern", s.traffic_pattern}, {"triggers", triggers},  {"peer", s.peer},
          {"min_fraction", s.min_fraction}};
}

Json write_policy(const racs::ServicePolicy& p) {
  Json match = Json::object();
  if (p.match.media_type) match["media_type"] = *p.match.media_type;
  if (p.match.requestor_name) match["requestor_name"] = *p.match.requestor_name;
  if (p.match.access_network_type) match["access_network_type"] = *p.match.access_network_type;
  if (p.match.subscriber_pattern) match["subscriber_pattern"] = *p.match.subscriber_pattern;
  Json j = {{"id", p.policy_id},
            {"match", match},
            {"limits", p.limits},
            {"precedence", p.precedence},
            {"admission", racs::to_string(p.admission)},
            {"burst_ms", p.burst_ms}};
  if (p.class_override) j["class_override"] = *p.class_override;
  if (p.nat) j["nat"] = *p.nat;
  return j;
}

Json write_action(const Action& a) {
  Json j = {{"at_ms", time_json(a.at, kMicrosPerMilli)}, {"op", to_string(a.op)}};
  if (!a.subscriber.empty()) j["subscriber"] = a.subscriber;
  if (!a.access_network.empty()) j["access_network"] = a.access_network;
  if (a.credentials) j["credentials"] = *a.credentials;
  if (!a.label.empty()) j["label"] = a.label;
  if (!a.service.empty()) j["service"] = a.service;
  if (a.mode) j["mode"] = ims::to_string(*a.mode);
  if (a.qos) j["qos"] = *a.qos;
  if (a.peer) j["peer"] = *a.peer;
  if (a.initiator != ims::Initiator::user) j["initiator"] = ims::to_string(a.initiator);
  if (!a.location.empty()) j["location"] = a.location;
  return j;
}

Json write_source(const SourceSpec& s) {
  Json j = {{"session", s.session},
            {"direction", to_string(s.direction)},
            {"model", transport::to_string(s.model)},
            {"rate_kbps", s.rate_kbps},
            {"packet_size", s.packet_size},
            {"start_ms", time_json(s.start, kMicrosPerMilli)},
            {"stop_ms", time_json(s.stop, kMicrosPerMilli)}};
  if (s.model == transport::SourceModel::onoff) {
    j["on_ms"] = time_json(s.on_mean, kMicrosPerMilli);
    j["off_ms"] = time_json(s.off_mean, kMicrosPerMilli);
  }
  return j;
}

std::string describe_position(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace

std::string_view to_string(ActionOp op) { return kOpNames[static_cast<std::size_t>(op)]; }

std::optional<ActionOp> parse_action_op(std::string_view s) {
  for (std::size_t i = 0; i < std::size(kOpNames); ++i)
    if (kOpNames[i] == s) return static_cast<ActionOp>(i);
  return std::nullopt;
}

nass::TerminalProfile default_terminal() {
  nass::TerminalProfile t;
  t.connectivity.supported_interfaces = {"eth"};
  t.connectivity.current_interface = "eth";
  return t;
}

static std::string join_errors(const std::vector<std::string>& errors) {
  std::string out = std::to_string(errors.size()) + " scenario error(s)";
  for (const auto& e : errors) out += "\n  " + e;
  return out;
}

ScenarioError::ScenarioError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

Scenario from_json(const Json& j) {
  Reader r;
  Scenario s;
  if (!r.object(j, "scenario",
                {"name", "duration_s", "seed", "signaling_delay_ms", "token_redeem_delay_ms", "token_ttl_s",
                 "queue_limit_ms", "better_best_effort_min_priority", "class_map", "dscp", "mos_feedback",
                 "topology", "resource_control", "access_networks", "subscribers", "application_servers",
                 "services", "policies", "actions", "sources"}))
    throw ScenarioError(r.errors);

  r.get(j, "name", "", s.name, true);
  r.time(j, "duration_s", "", s.duration, kMicrosPerSecond, true);
  r.get(j, "seed", "", s.seed);
  r.time(j, "signaling_delay_ms", "", s.signaling_delay, kMicrosPerMilli);
  r.time(j, "token_redeem_delay_ms", "", s.token_redeem_delay, kMicrosPerMilli);
  r.time(j, "token_ttl_s", "", s.token_ttl, kMicrosPerSecond);
  r.time(j, "queue_limit_ms", "", s.queue_limit, kMicrosPerMilli);
  r.get_optional(j, "better_best_effort_min_priority", "", s.better_best_effort_min_priority);
  if (j.contains("class_map")) r.guarded("class_map", [&] { s.class_map = class_mapping_from_json(j["class_map"]); });
  if (j.contains("dscp")) r.guarded("dscp", [&] { s.dscp = dscp_table_from_json(j["dscp"]); });
  if (j.contains("mos_feedback") && r.object(j["mos_feedback"], "mos_feedback", {"enabled", "threshold"})) {
    r.get(j["mos_feedback"], "enabled", "mos_feedback", s.mos_feedback.enabled);
    r.get(j["mos_feedback"], "threshold", "mos_feedback", s.mos_feedback.threshold);
  }

  if (!j.contains("topology")) {
    r.fail("topology", "missing required field");
  } else if (r.object(j["topology"], "topology", {"core_link", "links"})) {
    const auto& t = j["topology"];
    r.get(t, "core_link", "topology", s.core_link, true);
    for_array(r, t, "links", "topology",
              [&](const Json& e, const std::string& p) { s.links.push_back(read_link(r, e, p)); }, true);
  }
  for_array(r, j, "resource_control", "", [&](const Json& e, const std::string& p) {
    racs::ResourceControlConfig c;
    if (r.object(e, p, {"id", "access_network_types"})) {
      r.get(e, "id", p, c.id, true);
      r.get(e, "access_network_types", p, c.access_network_types, true);
    }
    s.resource_control.push_back(std::move(c));
  }, true);
  for_array(r, j, "access_networks", "", [&](const Json& e, const std::string& p) {
    nass::AccessNetwork n;
    if (r.object(e, p, {"id", "type", "pool", "link", "racs_point_of_contact"})) {
      r.get(e, "id", p, n.id, true);
      r.get(e, "type", p, n.type, true);
      std::string pool;
      if (r.get(e, "pool", p, pool, true)) {
        auto cidr = Cidr::parse(pool);
        if (cidr)
          n.pool = *cidr;
        else
          r.fail(Reader::at(p, "pool"), "not a CIDR block: '" + pool + "'");
      }
      r.get(e, "link", p, n.access_link, true);
      r.get(e, "racs_point_of_contact", p, n.racs_point_of_contact, true);
    }
    s.access_networks.push_back(std::move(n));
  }, true);
  for_array(r, j, "subscribers", "",
            [&](const Json& e, const std::string& p) { s.subscribers.push_back(read_subscriber(r, e, p)); }, true);
  for_array(r, j, "application_servers", "",
            [&](const Json& e, const std::string& p) { s.application_servers.push_back(read_server(r, e, p)); });
  for_array(r, j, "services", "",
            [&](const Json& e, const std::string& p) { s.services.push_back(read_service(r, e, p)); }, true);
  for_array(r, j, "policies", "",
            [&](const Json& e, const std::string& p) { s.policies.push_back(read_policy(r, e, p)); });
  for_array(r, j, "actions", "",
            [&](const Json& e, const std::string& p) { s.actions.push_back(read_action(r, e, p)); });
  for_array(r, j, "sources", "",
            [&](const Json& e, const std::string& p) { s.sources.push_back(read_source(r, e, p)); });

  auto semantic = validate(s);
  r.errors.insert(r.errors.end(), semantic.begin(), semantic.end());
  if (!r.errors.empty()) throw ScenarioError(r.errors);
  return s;
}

Json to_json(const Scenario& s) {
  Json links = Json::array();
  for (const auto& l : s.links) {
    Json shares = Json::object();
    for (const auto& [c, v] : l.class_shares) shares[std::string(to_string(c))] = v;
    links.push_back({{"id", l.id},
                     {"rate_kbps", l.rate_kbps},
                     {"delay_ms", time_json(l.propagation_delay, kMicrosPerMilli)},
                     {"class_shares", shares}});
  }
  Json rcfs = Json::array();
  for (const auto& c : s.resource_control)
    rcfs.push_back({{"id", c.id}, {"access_network_types", c.access_network_types}});
  Json networks = Json::array();
  for (const auto& n : s.access_networks)
    networks.push_back({{"id", n.id},
                        {"type", n.type},
                        {"pool", n.pool.str()},
                        {"link", n.access_link},
                        {"racs_point_of_contact", n.racs_point_of_contact}});
  Json subscribers = Json::array();
  for (const auto& sub : s.subscribers) subscribers.push_back(write_subscriber(sub));
  Json servers = Json::array();
  for (const auto& a : s.application_servers) {
    Json aj = {{"id", a.id}};
    if (a.ul_bandwidth_cap) aj["ul_bandwidth_cap"] = *a.ul_bandwidth_cap;
    if (a.dl_bandwidth_cap) aj["dl_bandwidth_cap"] = *a.dl_bandwidth_cap;
    if (a.priority_cap) aj["priority_cap"] = *a.priority_cap;
    servers.push_back(aj);
  }
  Json services = Json::array();
  for (const auto& sv : s.services) services.push_back(write_service(sv));
  Json policies = Json::array();
  for (const auto& p : s.policies) policies.push_back(write_policy(p));
  Json actions = Json::array();
  for (const auto& a : s.actions) actions.push_back(write_action(a));
  Json sources = Json::array();
  for (const auto& src : s.sources) sources.push_back(write_source(src));

  Json j = {
      {"name", s.name},
      {"duration_s", time_json(s.duration, kMicrosPerSecond)},
      {"seed", s.seed},
      {"signaling_delay_ms", time_json(s.signaling_delay, kMicrosPerMilli)},
      {"token_redeem_delay_ms", time_json(s.token_redeem_delay, kMicrosPerMilli)},
      {"token_ttl_s", time_json(s.token_ttl, kMicrosPerSecond)},
      {"queue_limit_ms", time_json(s.queue_limit, kMicrosPerMilli)},
      {"class_map", class_mapping_to_json(s.class_map)},
      {"dscp", dscp_table_to_json(s.dscp)},
      {"mos_feedback", {{"enabled", s.mos_feedback.enabled}, {"threshold", s.mos_feedback.threshold}}},
      {"topology", {{"core_link", s.core_link}, {"links", links}}},
      {"resource_control", rcfs},
      {"access_networks", networks},
      {"subscribers", subscribers},
      {"application_servers", servers},
      {"services", services},
      {"policies", policies},
      {"actions", actions},
      {"sources", sources},
  };
  if (s.better_best_effort_min_priority)
    j["better_best_effort_min_priority"] = *s.better_best_effort_min_priority;
  return j;
}

Scenario parse_scenario_text(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ScenarioError({describe_position(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                         strip_json_prefix(e.what())});
  }
  return from_json(j);
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError({path + ": cannot open file"});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

// -- semantic checks --------------------------------------------------------

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> errors;
  auto fail = [&](const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); };
  auto dangling = [&](const std::string& path, std::string_view what, const std::string& id) {
    errors.push_back(path + ": dangling reference to unknown " + std::string(what) + " '" + id + "'");
  };
  auto check = [&](const std::string& path, auto&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
  };

  if (s.name.empty()) fail("name", "must not be empty");
  if (s.duration <= 0) fail("duration_s", "must be positive");
  if (s.token_ttl <= 0) fail("token_ttl_s", "must be positive");
  if (s.queue_limit <= 0) fail("queue_limit_ms", "must be positive");
  if (s.better_best_effort_min_priority &&
      (*s.better_best_effort_min_priority < kMinPriority || *s.better_best_effort_min_priority > kMaxPriority))
    fail("better_best_effort_min_priority", "must lie in [0, 15]");
  if (s.mos_feedback.threshold < 1.0 || s.mos_feedback.threshold > 5.0)
    fail("mos_feedback.threshold", "must lie in [1, 5]");

  std::set<std::string, std::less<>> links;
  for (std::size_t i = 0; i < s.links.size(); ++i) {
    const auto& l = s.links[i];
    const std::string p = "topology.links[" + std::to_string(i) + "]";
    if (!links.insert(l.id).second) fail(p + ".id", "duplicate link '" + l.id + "'");
    if (l.rate_kbps <= 0) fail(p + ".rate_kbps", "must be positive");
    double sum = 0;
    for (const auto& [c, v] : l.class_shares) {
      if (v < 0 || v > 1) fail(p + ".class_shares." + std::string(to_string(c)), "must lie in [0, 1]");
      if (c != TransportServiceClass::BE) sum += v;
    }
    if (sum > 1 + 1e-9) fail(p + ".class_shares", "reservable shares sum above 1");
  }
  if (s.links.empty()) fail("topology.links", "at least one link is required");
  if (!s.core_link.empty() && !links.count(s.core_link)) dangling("topology.core_link", "link", s.core_link);

  std::map<std::string, const racs::ResourceControlConfig*, std::less<>> rcfs;
  for (std::size_t i = 0; i < s.resource_control.size(); ++i) {
    const auto& c = s.resource_control[i];
    if (!rcfs.emplace(c.id, &c).second)
      fail("resource_control[" + std::to_string(i) + "].id", "duplicate resource control function '" + c.id + "'");
  }

  std::set<std::string, std::less<>> networks;
  for (std::size_t i = 0; i < s.access_networks.size(); ++i) {
    const auto& n = s.access_networks[i];
    const std::string p = "access_networks[" + std::to_string(i) + "]";
    if (!networks.insert(n.id).second) fail(p + ".id", "duplicate access network '" + n.id + "'");
    if (!n.access_link.empty() && !links.count(n.access_link)) dangling(p + ".link", "link", n.access_link);
    if (n.access_link == s.core_link && !n.access_link.empty())
      fail(p + ".link", "the core link cannot serve as an access link");
    auto rcf = rcfs.find(n.racs_point_of_contact);
    if (rcf == rcfs.end()) {
      if (!n.racs_point_of_contact.empty())
        dangling(p + ".racs_point_of_contact", "resource control function", n.racs_point_of_contact);
    } else {
      const auto& types = rcf->second->access_network_types;
      if (std::find(types.begin(), types.end(), n.type) == types.end())
        fail(p + ".racs_point_of_contact", "'" + n.racs_point_of_contact + "' does not serve access network type '" +
                                               n.type + "'");
    }
    for (std::size_t k = 0; k < i; ++k) {
      const Cidr& a = s.access_networks[k].pool;
      if (a.contains(n.pool.base) || n.pool.contains(a.base))
        fail(p + ".pool", "overlaps the pool of '" + s.access_networks[k].id + "'");
    }
  }

  std::set<std::string, std::less<>> servers;
  for (std::size_t i = 0; i < s.application_servers.size(); ++i)
    if (!servers.insert(s.application_servers[i].id).second)
      fail("application_servers[" + std::to_string(i) + "].id",
           "duplicate application server '" + s.application_servers[i].id + "'");

  std::set<std::string, std::less<>> services;
  for (std::size_t i = 0; i < s.services.size(); ++i) {
    const auto& sv = s.services[i];
    const std::string p = "services[" + std::to_string(i) + "]";
    if (!services.insert(sv.service_id).second) fail(p + ".id", "duplicate service '" + sv.service_id + "'");
    check(p + ".required_qos", [&] { ngnqos::validate(sv.required_qos); });
    if (!(sv.min_fraction > 0 && sv.min_fraction <= 1)) fail(p + ".min_fraction", "must lie in (0, 1]");
    if (!Ipv4::parse(sv.peer)) fail(p + ".peer", "not an IPv4 address: '" + sv.peer + "'");
    for (std::size_t k = 0; k < sv.triggers.size(); ++k)
      if (!servers.count(sv.triggers[k].as_id))
        dangling(p + ".triggers[" + std::to_string(k) + "].as", "application server", sv.triggers[k].as_id);
  }
  for (std::size_t i = 0; i < s.services.size(); ++i)
    for (std::size_t k = 0; k < s.services[i].triggers.size(); ++k) {
      const auto& t = s.services[i].triggers[k];
      if (t.service_id && !services.count(*t.service_id))
        dangling("services[" + std::to_string(i) + "].triggers[" + std::to_string(k) + "].service_id", "service",
                 *t.service_id);
    }

  std::set<std::string, std::less<>> subscribers;
  for (std::size_t i = 0; i < s.subscribers.size(); ++i) {
    const auto& sub = s.subscribers[i];
    const std::string p = "subscribers[" + std::to_string(i) + "]";
    if (!subscribers.insert(sub.id).second) fail(p + ".id", "duplicate subscriber '" + sub.id + "'");
    check(p + ".qos_profile", [&] { sub.qos_profile.validate(); });
    check(p + ".terminal", [&] { sub.terminal.validate(); });
    for (std::size_t k = 0; k < sub.service_profile.subscribed_services.size(); ++k) {
      const auto& id = sub.service_profile.subscribed_services[k];
      if (!services.count(id))
        dangling(p + ".service_profile.subscribed_services[" + std::to_string(k) + "]", "service", id);
    }
  }

  std::set<std::string, std::less<>> policy_ids;
  std::set<int> precedences;
  for (std::size_t i = 0; i < s.policies.size(); ++i) {
    const auto& pol = s.policies[i];
    const std::string p = "policies[" + std::to_string(i) + "]";
    if (!policy_ids.insert(pol.policy_id).second) fail(p + ".id", "duplicate policy '" + pol.policy_id + "'");
    if (!precedences.insert(pol.precedence).second)
      fail(p + ".precedence", "precedence " + std::to_string(pol.precedence) + " is already used");
    if (pol.burst_ms <= 0) fail(p + ".burst_ms", "must be positive");
    check(p + ".limits", [&] { ngnqos::validate(pol.limits); });
  }

  // Labels must be introduced by an initiate that runs no later than their use.
  std::map<std::string, std::pair<SimTime, std::size_t>, std::less<>> labels;
  for (std::size_t i = 0; i < s.actions.size(); ++i) {
    const auto& a = s.actions[i];
    if (a.op != ActionOp::initiate || a.label.empty()) continue;
    if (!labels.emplace(a.label, std::pair{a.at, i}).second)
      fail("actions[" + std::to_string(i) + "].label", "duplicate session label '" + a.label + "'");
  }
  auto runs_before = [&](std::pair<SimTime, std::size_t> a, SimTime at, std::size_t index) {
    return a.first < at || (a.first == at && a.second < index);
  };
  for (std::size_t i = 0; i < s.actions.size(); ++i) {
    const auto& a = s.actions[i];
    const std::string p = "actions[" + std::to_string(i) + "]";
    if (a.at > s.duration && s.duration > 0) fail(p + ".at_ms", "lies after the end of the run");
    switch (a.op) {
      case ActionOp::attach:
        if (!networks.count(a.access_network)) dangling(p + ".access_network", "access network", a.access_network);
        [[fallthrough]];
      case ActionOp::register_user:
      case ActionOp::detach:
      case ActionOp::update_location:
        if (!subscribers.count(a.subscriber)) dangling(p + ".subscriber", "subscriber", a.subscriber);
        break;
      case ActionOp::initiate:
        if (!subscribers.count(a.subscriber)) dangling(p + ".subscriber", "subscriber", a.subscriber);
        if (!services.count(a.service)) dangling(p + ".service", "service", a.service);
        if (a.label.empty()) fail(p + ".label", "missing required field");
        if (a.qos) check(p + ".qos", [&] { ngnqos::validate(*a.qos); });
        if (a.peer && !Ipv4::parse(*a.peer)) fail(p + ".peer", "not an IPv4 address: '" + *a.peer + "'");
        break;
      case ActionOp::renegotiate:
      case ActionOp::terminate: {
        auto it = labels.find(a.label);
        if (it == labels.end())
          dangling(p + ".label", "session label", a.label);
        else if (!runs_before(it->second, a.at, i))
          fail(p + ".label", "session '" + a.label + "' is used before it is initiated");
        if (a.op == ActionOp::renegotiate) {
          if (!a.qos)
            fail(p + ".qos", "missing required field");
          else
            check(p + ".qos", [&] { ngnqos::validate(*a.qos); });
        }
        break;
      }
    }
  }

  std::set<std::pair<std::string, LinkDirection>> bound;
  for (std::size_t i = 0; i < s.sources.size(); ++i) {
    const auto& src = s.sources[i];
    const std::string p = "sources[" + std::to_string(i) + "]";
    if (!labels.count(src.session)) dangling(p + ".session", "session label", src.session);
    if (!bound.insert({src.session, src.direction}).second)
      fail(p, "session '" + src.session + "' already has a " + std::string(to_string(src.direction)) + " source");
    if (src.rate_kbps <= 0) fail(p + ".rate_kbps", "must be positive");
    if (src.packet_size < 64 || src.packet_size > 1500) fail(p + ".packet_size", "must lie in [64, 1500] bytes");
    if (src.stop <= src.start) fail(p + ".stop_ms", "must be later than start_ms");
    if (src.model == transport::SourceModel::onoff && (src.on_mean <= 0 || src.off_mean <= 0))
      fail(p, "on/off sources need positive on_ms and off_ms");
  }
  return errors;
}

}  // namespace ngnqos::scenario
