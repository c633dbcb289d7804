#include "ngnqos/core_model.hpp"

#include <algorithm>
#include <stdexcept>

#include "ngnqos/address.hpp"

namespace ngnqos {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::pair<Enum, std::string_view>, N>& table,
                           std::string_view name) {
  for (const auto& [value, text] : table)
    if (text == name) return value;
  return std::nullopt;
}

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum v) {
  for (const auto& [value, text] : table)
    if (value == v) return text;
  return "?";
}

constexpr std::array<std::pair<TransportServiceClass, std::string_view>, 6> kClassNames = {{
    {TransportServiceClass::EF, "EF"},
    {TransportServiceClass::AF1, "AF1"},
    {TransportServiceClass::AF2, "AF2"},
    {TransportServiceClass::AF3, "AF3"},
    {TransportServiceClass::AF4, "AF4"},
    {TransportServiceClass::BE, "BE"},
}};

constexpr std::array<std::pair<MediaType, std::string_view>, 5> kMediaNames = {{
    {MediaType::voice, "voice"},
    {MediaType::video, "video"},
    {MediaType::streaming_audio, "streaming_audio"},
    {MediaType::messaging, "messaging"},
    {MediaType::data, "data"},
}};

constexpr std::array<std::pair<Direction, std::string_view>, 2> kDirectionNames = {{
    {Direction::unidirectional, "unidirectional"},
    {Direction::bidirectional, "bidirectional"},
}};

constexpr std::array<std::pair<Symmetry, std::string_view>, 2> kSymmetryNames = {{
    {Symmetry::symmetric, "symmetric"},
    {Symmetry::asymmetric, "asymmetric"},
}};

constexpr std::array<std::pair<Cast, std::string_view>, 2> kCastNames = {{
    {Cast::unicast, "unicast"},
    {Cast::multicast, "multicast"},
}};

constexpr std::array<std::pair<Stream, std::string_view>, 3> kStreamNames = {{
    {Stream::upstream, "upstream"},
    {Stream::downstream, "downstream"},
    {Stream::both, "both"},
}};

}  // namespace

bool is_valid(const QoSParameters& q) {
  return q.ul_bandwidth >= 0 && q.dl_bandwidth >= 0 && q.max_delay >= 0 && q.max_jitter >= 0 &&
         q.max_loss >= 0.0 && q.max_loss <= 1.0 && q.priority >= kMinPriority &&
         q.priority <= kMaxPriority;
}

void validate(const QoSParameters& q) {
  if (q.ul_bandwidth < 0 || q.dl_bandwidth < 0)
    throw std::invalid_argument("bandwidth must be non-negative");
  if (q.max_delay < 0) throw std::invalid_argument("max_delay must be non-negative");
  if (q.max_jitter < 0) throw std::invalid_argument("max_jitter must be non-negative");
  if (!(q.max_loss >= 0.0 && q.max_loss <= 1.0))
    throw std::invalid_argument("max_loss must lie in [0, 1]");
  if (q.priority < kMinPriority || q.priority > kMaxPriority)
    throw std::invalid_argument("priority must lie in [0, 15]");
}

bool satisfies(const QoSParameters& offered, const QoSParameters& required) {
  return offered.ul_bandwidth >= required.ul_bandwidth &&
         offered.dl_bandwidth >= required.dl_bandwidth &&
         offered.max_delay <= required.max_delay && offered.max_jitter <= required.max_jitter &&
         offered.max_loss <= required.max_loss && offered.priority >= required.priority;
}

std::string_view to_string(TransportServiceClass c) { return name_of(kClassNames, c); }
std::optional<TransportServiceClass> parse_service_class(std::string_view name) {
  return lookup(kClassNames, name);
}

std::string_view to_string(MediaType m) { return name_of(kMediaNames, m); }
std::optional<MediaType> parse_media_type(std::string_view name) {
  return lookup(kMediaNames, name);
}

std::string_view to_string(Direction v) { return name_of(kDirectionNames, v); }
std::string_view to_string(Symmetry v) { return name_of(kSymmetryNames, v); }
std::string_view to_string(Cast v) { return name_of(kCastNames, v); }
std::string_view to_string(Stream v) { return name_of(kStreamNames, v); }
std::optional<Direction> parse_direction(std::string_view s) { return lookup(kDirectionNames, s); }
std::optional<Symmetry> parse_symmetry(std::string_view s) { return lookup(kSymmetryNames, s); }
std::optional<Cast> parse_cast(std::string_view s) { return lookup(kCastNames, s); }
std::optional<Stream> parse_stream(std::string_view s) { return lookup(kStreamNames, s); }

std::string_view to_string(GateState s) { return s == GateState::open ? "open" : "closed"; }

bool destination_matches(std::string_view pattern, std::string_view destination) {
  if (pattern == "*") return true;
  if (pattern.find('/') != std::string_view::npos) {
    auto block = Cidr::parse(pattern);
    auto address = Ipv4::parse(destination);
    return block && address && block->contains(*address);
  }
  return pattern == destination;
}

bool GateSetting::passes(std::string_view destination) const {
  if (state == GateState::closed) return false;
  return std::any_of(allowed_destinations.begin(), allowed_destinations.end(),
                     [&](const std::string& p) { return destination_matches(p, destination); });
}

ClassMapping::ClassMapping() {
  using C = TransportServiceClass;
  rules_[MediaType::voice] = {{0, C::EF}};
  rules_[MediaType::video] = {{0, C::AF1}};
  rules_[MediaType::streaming_audio] = {{0, C::AF2}};
  rules_[MediaType::messaging] = {{0, C::AF3}};
  rules_[MediaType::data] = {{8, C::AF4}, {0, C::BE}};
}

void ClassMapping::set_rules(MediaType media, std::vector<Rule> rules) {
  std::sort(rules.begin(), rules.end(),
            [](const Rule& a, const Rule& b) { return a.min_priority > b.min_priority; });
  if (rules.empty() || rules.back().min_priority != 0)
    throw std::invalid_argument("class mapping for " + std::string(to_string(media)) +
                                " must cover priority 0");
  rules_[media] = std::move(rules);
}

const std::vector<ClassMapping::Rule>& ClassMapping::rules(MediaType media) const {
  return rules_.at(media);
}

TransportServiceClass ClassMapping::class_for(MediaType media, int priority) const {
  for (const Rule& r : rules_.at(media))
    if (priority >= r.min_priority) return r.service_class;
  return TransportServiceClass::BE;
}

TransportServiceClass class_for(MediaType media, int priority) {
  static const ClassMapping defaults;
  return defaults.class_for(media, priority);
}

DscpTable::DscpTable() : codepoints_{46, 10, 18, 26, 34, 0} {}

std::uint8_t DscpTable::dscp_for(TransportServiceClass c) const {
  return codepoints_[static_cast<std::size_t>(c)];
}

void DscpTable::set(TransportServiceClass c, std::uint8_t codepoint) {
  if (codepoint > 63) throw std::invalid_argument("DSCP must fit in 6 bits");
  codepoints_[static_cast<std::size_t>(c)] = codepoint;
}

std::uint8_t dscp_for(TransportServiceClass c) {
  static const DscpTable defaults;
  return defaults.dscp_for(c);
}

}  // namespace ngnqos
