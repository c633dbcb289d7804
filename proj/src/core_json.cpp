#include "ngnqos/core_json.hpp"

#include <set>
#include <stdexcept>

namespace ngnqos {

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known,
                    std::string_view what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || k == key;
    if (!ok) throw std::invalid_argument("unknown field '" + key + "' in " + std::string(what));
  }
}

template <typename T, typename Parse>
T parse_enum(const nlohmann::json& j, Parse parse, std::string_view what) {
  const auto& s = j.get_ref<const std::string&>();
  auto v = parse(s);
  if (!v) throw std::invalid_argument("unknown " + std::string(what) + " '" + s + "'");
  return *v;
}

}  // namespace

void to_json(nlohmann::json& j, const QoSParameters& q) {
  j = {{"ul_bandwidth", q.ul_bandwidth}, {"dl_bandwidth", q.dl_bandwidth},
       {"max_delay", q.max_delay},       {"max_jitter", q.max_jitter},
       {"max_loss", q.max_loss},         {"priority", q.priority}};
}

void from_json(const nlohmann::json& j, QoSParameters& q) {
  reject_unknown(j,
                 {"ul_bandwidth", "dl_bandwidth", "max_delay", "max_jitter", "max_loss", "priority"},
                 "QoS parameters");
  QoSParameters out;
  out.ul_bandwidth = j.value("ul_bandwidth", std::int64_t{0});
  out.dl_bandwidth = j.value("dl_bandwidth", std::int64_t{0});
  out.max_delay = j.value("max_delay", std::int64_t{0});
  out.max_jitter = j.value("max_jitter", std::int64_t{0});
  out.max_loss = j.value("max_loss", 0.0);
  out.priority = j.value("priority", 0);
  validate(out);
  q = out;
}

void to_json(nlohmann::json& j, const TrafficPattern& p) {
  j = {{"direction", to_string(p.direction)},
       {"symmetry", to_string(p.symmetry)},
       {"cast", to_string(p.cast)},
       {"stream", to_string(p.stream)}};
}

void from_json(const nlohmann::json& j, TrafficPattern& p) {
  reject_unknown(j, {"direction", "symmetry", "cast", "stream"}, "traffic pattern");
  TrafficPattern out;
  if (j.contains("direction"))
    out.direction = parse_enum<Direction>(j["direction"], parse_direction, "direction");
  if (j.contains("symmetry"))
    out.symmetry = parse_enum<Symmetry>(j["symmetry"], parse_symmetry, "symmetry");
  if (j.contains("cast")) out.cast = parse_enum<Cast>(j["cast"], parse_cast, "cast");
  if (j.contains("stream")) out.stream = parse_enum<Stream>(j["stream"], parse_stream, "stream");
  if (!out.is_valid())
    throw std::invalid_argument("unidirectional traffic pattern cannot use stream 'both'");
  p = out;
}

void to_json(nlohmann::json& j, const GateSetting& g) {
  j = {{"state", to_string(g.state)}, {"allowed_destinations", g.allowed_destinations}};
}

void from_json(const nlohmann::json& j, GateSetting& g) {
  reject_unknown(j, {"state", "allowed_destinations"}, "gate setting");
  GateSetting out;
  std::string state = j.value("state", std::string("closed"));
  if (state == "open")
    out.state = GateState::open;
  else if (state == "closed")
    out.state = GateState::closed;
  else
    throw std::invalid_argument("unknown gate state '" + state + "'");
  out.allowed_destinations =
      j.value("allowed_destinations", std::vector<std::string>{});
  g = out;
}

void to_json(nlohmann::json& j, TransportServiceClass c) { j = std::string(to_string(c)); }
void from_json(const nlohmann::json& j, TransportServiceClass& c) {
  c = parse_enum<TransportServiceClass>(j, parse_service_class, "transport service class");
}

void to_json(nlohmann::json& j, MediaType m) { j = std::string(to_string(m)); }
void from_json(const nlohmann::json& j, MediaType& m) {
  m = parse_enum<MediaType>(j, parse_media_type, "media type");
}

nlohmann::json class_mapping_to_json(const ClassMapping& mapping) {
  nlohmann::json j = nlohmann::json::object();
  for (MediaType m : kAllMediaTypes) {
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& r : mapping.rules(m))
      rules.push_back({{"min_priority", r.min_priority}, {"class", r.service_class}});
    j[std::string(to_string(m))] = rules;
  }
  return j;
}

ClassMapping class_mapping_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("class_map must be an object");
  ClassMapping mapping;
  for (const auto& [name, value] : j.items()) {
    auto media = parse_media_type(name);
    if (!media) throw std::invalid_argument("class_map: unknown media type '" + name + "'");
    std::vector<ClassMapping::Rule> rules;
    if (value.is_string()) {
      rules.push_back({0, value.get<TransportServiceClass>()});
    } else {
      for (const auto& r : value) {
        reject_unknown(r, {"min_priority", "class"}, "class_map rule");
        rules.push_back({r.value("min_priority", 0), r.at("class").get<TransportServiceClass>()});
      }
    }
    mapping.set_rules(*media, std::move(rules));
  }
  return mapping;
}

nlohmann::json dscp_table_to_json(const DscpTable& table) {
  nlohmann::json j = nlohmann::json::object();
  for (auto c : kAllClasses) j[std::string(to_string(c))] = table.dscp_for(c);
  return j;
}

DscpTable dscp_table_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("dscp must be an object");
  DscpTable table;
  for (const auto& [name, value] : j.items()) {
    auto c = parse_service_class(name);
    if (!c) throw std::invalid_argument("dscp: unknown class '" + name + "'");
    int v = value.get<int>();
    if (v < 0 || v > 63) throw std::invalid_argument("dscp: codepoint out of range for " + name);
    table.set(*c, static_cast<std::uint8_t>(v));
  }
  std::set<std::uint8_t> seen;
  for (auto c : kAllClasses)
    if (!seen.insert(table.dscp_for(c)).second)
      throw std::invalid_argument("dscp: codepoints must be distinct");
  return table;
}

}  // namespace ngnqos
