#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ngnqos {

/// Bandwidth/delay/jitter/loss/priority tuple shared by requests, policies
/// and grants. Bandwidths are kbit/s, delay and jitter are ms.
struct QoSParameters {
  std::int64_t ul_bandwidth = 0;
  std::int64_t dl_bandwidth = 0;
  std::int64_t max_delay = 0;
  std::int64_t max_jitter = 0;
  double max_loss = 0.0;
  int priority = 0;

  bool operator==(const QoSParameters&) const = default;
};

inline constexpr int kMinPriority = 0;
inline constexpr int kMaxPriority = 15;

bool is_valid(const QoSParameters& qos);

/// Throws std::invalid_argument naming the first broken invariant.
void validate(const QoSParameters& qos);

/// Dominance test: `offered` is at least as good as `required` on every axis.
bool satisfies(const QoSParameters& offered, const QoSParameters& required);

enum class TransportServiceClass : std::uint8_t { EF, AF1, AF2, AF3, AF4, BE };

inline constexpr std::array<TransportServiceClass, 6> kAllClasses = {
    TransportServiceClass::EF,  TransportServiceClass::AF1, TransportServiceClass::AF2,
    TransportServiceClass::AF3, TransportServiceClass::AF4, TransportServiceClass::BE};

/// Scheduling rank, 0 is served first.
constexpr int precedence_rank(TransportServiceClass c) { return static_cast<int>(c); }

/// True when `a` is scheduled ahead of `b`.
constexpr bool outranks(TransportServiceClass a, TransportServiceClass b) {
  return precedence_rank(a) < precedence_rank(b);
}

constexpr bool is_assured(TransportServiceClass c) {
  return c >= TransportServiceClass::AF1 && c <= TransportServiceClass::AF4;
}

std::string_view to_string(TransportServiceClass c);
std::optional<TransportServiceClass> parse_service_class(std::string_view name);

enum class MediaType : std::uint8_t { voice, video, streaming_audio, messaging, data };

inline constexpr std::array<MediaType, 5> kAllMediaTypes = {
    MediaType::voice, MediaType::video, MediaType::streaming_audio, MediaType::messaging,
    MediaType::data};

std::string_view to_string(MediaType m);
std::optional<MediaType> parse_media_type(std::string_view name);

enum class Direction : std::uint8_t { unidirectional, bidirectional };
enum class Symmetry : std::uint8_t { symmetric, asymmetric };
enum class Cast : std::uint8_t { unicast, multicast };
enum class Stream : std::uint8_t { upstream, downstream, both };

std::string_view to_string(Direction v);
std::string_view to_string(Symmetry v);
std::string_view to_string(Cast v);
std::string_view to_string(Stream v);
std::optional<Direction> parse_direction(std::string_view s);
std::optional<Symmetry> parse_symmetry(std::string_view s);
std::optional<Cast> parse_cast(std::string_view s);
std::optional<Stream> parse_stream(std::string_view s);

struct TrafficPattern {
  Direction direction = Direction::bidirectional;
  Symmetry symmetry = Symmetry::symmetric;
  Cast cast = Cast::unicast;
  Stream stream = Stream::both;

  bool operator==(const TrafficPattern&) const = default;

  bool is_valid() const { return !(direction == Direction::unidirectional && stream == Stream::both); }
  bool carries_upstream() const {
    return direction == Direction::bidirectional || stream != Stream::downstream;
  }
  bool carries_downstream() const {
    return direction == Direction::bidirectional || stream != Stream::upstream;
  }
};

enum class GateState : std::uint8_t { open, closed };

std::string_view to_string(GateState s);

/// Address patterns: "*" matches anything, "a.b.c.d/n" matches a CIDR block,
/// anything else must match exactly (addresses or realm names).
bool destination_matches(std::string_view pattern, std::string_view destination);

struct GateSetting {
  GateState state = GateState::closed;
  std::vector<std::string> allowed_destinations;

  bool operator==(const GateSetting&) const = default;

  bool passes(std::string_view destination) const;
};

/// Operator table from (media type, priority) to transport class. Each media
/// type owns a list of (minimum priority, class) rules; the first rule whose
/// minimum is <= the priority wins.
class ClassMapping {
 public:
  struct Rule {
    int min_priority = 0;
    TransportServiceClass service_class = TransportServiceClass::BE;
    bool operator==(const Rule&) const = default;
  };

  ClassMapping();  // built-in default table

  void set_rules(MediaType media, std::vector<Rule> rules);
  const std::vector<Rule>& rules(MediaType media) const;

  TransportServiceClass class_for(MediaType media, int priority) const;

  bool operator==(const ClassMapping&) const = default;

 private:
  std::map<MediaType, std::vector<Rule>> rules_;
};

/// voice -> EF, video -> AF1, streaming_audio -> AF2, messaging -> AF3,
/// data -> AF4 at priority >= 8, otherwise BE.
TransportServiceClass class_for(MediaType media, int priority);

class DscpTable {
 public:
  DscpTable();  // RFC 3246 / RFC 2597 AFx1 codepoints

  std::uint8_t dscp_for(TransportServiceClass c) const;
  void set(TransportServiceClass c, std::uint8_t codepoint);

  bool operator==(const DscpTable&) const = default;

 private:
  std::array<std::uint8_t, 6> codepoints_{};
};

std::uint8_t dscp_for(TransportServiceClass c);

}  // namespace ngnqos
