#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "ngnqos/enforcement.hpp"
#include "ngnqos/event_log.hpp"
#include "ngnqos/link.hpp"
#include "ngnqos/scheduler.hpp"

namespace ngnqos::transport {

struct Packet {
  std::uint64_t id = 0;
  FlowKey flow_key;
  std::int64_t size = 0;  // bytes
  std::uint8_t dscp = 0;
  TransportServiceClass service_class = TransportServiceClass::BE;
  bool low_drop_precedence = false;
  SimTime created_at = 0;
  std::optional<SimTime> delivered_at;
  std::optional<DropReason> dropped;
  std::size_t hop = 0;
};

/// Serialization time in us, rounded to nearest.
SimTime serialization_time(std::int64_t size_bytes, std::int64_t rate_kbps);

/// Per-class FIFOs of one link direction. EF is strict priority, AF1-AF4
/// share the residual by deficit round robin, BE goes last.
class LinkQueues {
 public:
  static constexpr std::array<std::int64_t, 4> kAfWeights = {4, 3, 2, 1};
  static constexpr std::int64_t kQuantumBytes = 1500;

  LinkQueues(LinkRef link, std::int64_t rate_kbps, SimTime propagation, std::int64_t limit_bytes);

  const LinkRef& link() const { return link_; }
  std::int64_t rate_kbps() const { return rate_kbps_; }
  SimTime propagation() const { return propagation_; }
  std::int64_t limit_bytes() const { return limit_bytes_; }

  /// Tail drop; a low-drop-precedence BE packet may push out the newest
  /// plain BE packet instead. Returns the dropped packet if any (possibly
  /// the argument itself).
  std::optional<Packet> enqueue(Packet packet);
  /// Pre: !empty().
  Packet dequeue();

  bool empty() const;
  std::size_t packets(TransportServiceClass c) const { return queues_[index(c)].size(); }
  std::int64_t bytes(TransportServiceClass c) const { return bytes_[index(c)]; }

  bool busy = false;
  std::array<std::uint64_t, 6> sent_packets{};
  std::array<std::uint64_t, 6> sent_bytes{};
  std::array<std::uint64_t, 6> overflow_drops{};

 private:
  static std::size_t index(TransportServiceClass c) { return static_cast<std::size_t>(c); }
  Packet pop(std::size_t i);

  LinkRef link_;
  std::int64_t rate_kbps_;
  SimTime propagation_;
  std::int64_t limit_bytes_;
  std::array<std::deque<Packet>, 6> queues_;
  std::array<std::int64_t, 6> bytes_{};
  std::array<std::int64_t, 4> deficit_{};
  std::size_t rr_ = 0;
  bool fresh_turn_ = true;
};

enum class SourceModel : std::uint8_t { cbr, onoff };

std::string_view to_string(SourceModel m);
std::optional<SourceModel> parse_source_model(std::string_view s);

/// Open-loop UDP-like source. On/off periods are exponential with the given
/// means; packets go out at `rate_kbps` during on periods.
struct TrafficSource {
  FlowKey flow_key;
  std::vector<LinkRef> path;
  SourceModel model = SourceModel::cbr;
  std::int64_t rate_kbps = 0;
  std::int64_t packet_size = 0;
  SimTime start = 0;
  SimTime stop = 0;
  SimTime on_mean = 0;
  SimTime off_mean = 0;

  /// Throws std::invalid_argument.
  void validate() const;
  SimTime interval_numerator() const { return packet_size * 8000; }
};

/// Counters for the packets created within one simulated second.
struct SecondBin {
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::int64_t delay_sum_us = 0;
  std::int64_t jitter_sum_us = 0;
  std::uint64_t jitter_samples = 0;
  std::uint64_t bytes_delivered = 0;

  double mean_delay_ms() const;
  double jitter_ms() const;
  double throughput_kbps() const { return static_cast<double>(bytes_delivered) * 8.0 / 1000.0; }
  double loss() const;
};

struct FlowMeasurements {
  FlowKey flow_key;
  std::vector<SecondBin> seconds;
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::map<DropReason, std::uint64_t> drops_by_reason;
  std::int64_t delay_sum_us = 0;
  std::int64_t jitter_sum_us = 0;
  std::uint64_t jitter_samples = 0;
  std::uint64_t bytes_delivered = 0;
  SimTime active_time = 0;  // how long the source generated

  double mean_delay_ms() const;
  double jitter_ms() const;
  double loss() const;
  double throughput_kbps() const;
  /// Delivered kbit/s over [from_s, to_s), binned by creation second.
  double throughput_kbps(std::size_t from_s, std::size_t to_s) const;
};

Json to_json(const FlowMeasurements& m);

struct SimOptions {
  SimTime queue_limit = 100 * kMicrosPerMilli;  // per class, as time at line rate
  bool trace_packets = false;
  std::uint64_t seed = 1;
  /// Sources stop generating here even if their own stop is later.
  SimTime horizon = 0;
};

/// Packet-level model of the transport network. Packets are classified at
/// the enforcement point of every hop; only the first hop polices.
class TransportSim {
 public:
  TransportSim(const std::vector<LinkConfig>& links, EnforcementRegistry& enforcement,
               Scheduler& clock, EventLog& log, SimOptions options);

  /// Schedules the source's packets. Throws std::invalid_argument on an
  /// invalid source, an unknown link, or a duplicate flow key.
  void add_source(const TrafficSource& source);

  /// Measurements for every flow, series padded to `seconds` bins.
  std::map<FlowKey, FlowMeasurements> measurements(std::size_t seconds) const;
  const std::map<LinkRef, LinkQueues>& links() const { return links_; }

  std::uint64_t generated() const { return generated_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t in_flight() const { return generated_ - delivered_ - dropped_; }
  /// Times a link was found idle with a non-empty queue. Always 0.
  std::uint64_t work_conservation_violations() const { return idle_with_backlog_; }

 private:
  struct SourceState {
    TrafficSource source;
    std::mt19937_64 rng;
    SimTime period_start = 0;
    SimTime period_end = 0;
    std::uint64_t k = 0;
  };

  SimTime exponential(std::mt19937_64& rng, SimTime mean);
  void schedule_next(std::size_t source_index);
  void emit_packet(std::size_t source_index);
  void arrive(Packet packet);
  void try_start(LinkQueues& q);
  void finish(LinkQueues& q, Packet packet);
  void deliver(Packet packet);
  void drop(Packet packet, DropReason reason, const LinkRef& where);
  void check_conservation(const LinkQueues& q);
  void trace(const Packet& p, const LinkRef& where, std::string_view action,
             std::optional<DropReason> reason, bool via_default_gate);

  struct FlowState {
    FlowMeasurements m;
    std::optional<SimTime> last_delay;
    std::vector<LinkRef> path;
  };

  EnforcementRegistry* enforcement_;
  Scheduler* clock_;
  EventLog* log_;
  SimOptions options_;
  std::map<LinkRef, LinkQueues> links_;
  std::vector<SourceState> sources_;
  std::map<FlowKey, FlowState> flows_;
  std::uint64_t next_packet_ = 1;
  std::uint64_t generated_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t idle_with_backlog_ = 0;
};

/// Timed enforcement change for standalone runs.
struct PolicyChange {
  SimTime at = 0;
  LinkRef where;
  std::optional<TrafficPolicy> install;  // unset: remove `remove_key`
  FlowKey remove_key;
};

struct TransportRun {
  std::map<FlowKey, FlowMeasurements> flows;
  std::vector<Event> events;
  std::uint64_t digest = 0;
  std::uint64_t work_conservation_violations = 0;
  std::map<LinkRef, LinkQueues> links;
};

/// Self-contained simulation: installs the timeline, runs the sources until
/// `duration`, then drains every queue.
TransportRun run(const std::vector<LinkConfig>& topology, const std::vector<TrafficSource>& sources,
                 const std::vector<PolicyChange>& timeline, SimTime duration, std::uint64_t seed,
                 bool trace_packets = false);

}  // namespace ngnqos::transport
