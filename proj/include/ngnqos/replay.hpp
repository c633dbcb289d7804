#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ngnqos/core_model.hpp"
#include "ngnqos/event_log.hpp"

namespace ngnqos::replay {

/// Reservation totals re-derived from the log for one link direction.
struct LinkState {
  std::int64_t capacity = -1;  // -1: no run.config seen
  std::map<TransportServiceClass, std::int64_t> limit;
  std::map<TransportServiceClass, std::int64_t> reserved;
  std::map<TransportServiceClass, std::int64_t> peak;
  std::int64_t total = 0;
  std::int64_t peak_total = 0;
};

struct ReplayResult {
  std::vector<std::string> violations;
  std::map<std::string, LinkState> links;  // by "link/dir"
  std::size_t events = 0;
  std::size_t reservation_events = 0;
  std::size_t packet_events = 0;

  bool ok() const { return violations.empty(); }
};

/// Re-verifies ordering, capacity and gate invariants from the event stream
/// alone: reservations are re-summed from racs.reserve/modify/release, and
/// every traced packet pass is checked against the commit/release history of
/// its flow.
ReplayResult check(const std::vector<Event>& events);

/// Report/log consistency: peak reservations in the report equal the
/// re-derived ones, and every reported denial has a racs.* event with the
/// same session and reason.
std::vector<std::string> check_report(const ReplayResult& replay, const std::vector<Event>& events,
                                      const Json& report);

Json to_json(const ReplayResult& r);

}  // namespace ngnqos::replay
