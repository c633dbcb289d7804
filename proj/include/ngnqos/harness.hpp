#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ngnqos/event_log.hpp"
#include "ngnqos/ims_core.hpp"
#include "ngnqos/qoe.hpp"
#include "ngnqos/scenario.hpp"
#include "ngnqos/transport_sim.hpp"

namespace ngnqos::harness {

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the scenario's seed
  /// Replaces the mode of every initiate action.
  std::optional<ims::ScenarioMode> mode_override;
  bool trace_packets = false;
};

/// One entry per initiate action, keyed by its label.
struct SessionOutcome {
  std::string label;
  std::string session_id;  // empty if the session was never created
  std::string subscriber;
  std::string service;
  ims::ScenarioMode mode = ims::ScenarioMode::network_driven;
  std::string final_state;  // SessionState name, or "NotCreated"
  std::optional<QoSParameters> granted_qos;
  std::vector<std::string> denial_reasons;
  std::optional<std::string> rejected_at;
  std::string rejection_reason;
  /// Set when the initiate action itself failed, e.g. "NotRegistered".
  std::string error;
};

struct FlowOutcome {
  std::string session;
  LinkDirection direction = LinkDirection::up;
  bool started = false;
  std::string skip_reason;
  transport::FlowMeasurements measurements;
  std::optional<qoe::QoEReport> qoe;
};

struct LinkOutcome {
  LinkRef link;
  std::int64_t capacity = 0;
  std::map<TransportServiceClass, std::int64_t> limit;
  std::map<TransportServiceClass, std::int64_t> peak;
  std::int64_t peak_total = 0;
};

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::optional<ims::ScenarioMode> mode_override;
  std::vector<SessionOutcome> sessions;
  std::vector<FlowOutcome> flows;
  std::vector<LinkOutcome> links;
  std::map<std::string, std::size_t> event_counts;
  std::uint64_t log_digest = 0;
  bool capacity_invariants_hold = true;
  std::uint64_t work_conservation_violations = 0;
};

Json to_json(const RunReport& r);
/// label -> granted operation point (null when nothing was granted).
Json granted_qos_map(const RunReport& r);

struct RunResult {
  RunReport report;
  std::vector<Event> events;
};

/// Executes every timed action through NASS, IMS, RACS and the transport
/// model. Failures are recorded as outcomes, never thrown. Throws
/// std::invalid_argument only for a scenario that does not validate.
RunResult run_end_to_end(const scenario::Scenario& s, const RunOptions& options = {});

}  // namespace ngnqos::harness
