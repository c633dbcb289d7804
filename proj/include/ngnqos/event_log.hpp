#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ngnqos/scheduler.hpp"

namespace ngnqos {

using Json = nlohmann::json;

struct Event {
  SimTime t_us = 0;
  std::uint64_t seq = 0;
  std::string kind;
  Json payload;

  /// One JSONL line without the trailing newline.
  std::string to_line() const;
  static Event from_line(const std::string& line);
};

/// Append-only log shared by every module of a run. Events are stamped with
/// the scheduler's current time and a log-wide sequence number, so the log is
/// totally ordered by (t_us, seq).
class EventLog {
 public:
  explicit EventLog(const Scheduler& clock) : clock_(&clock) {}

  const Event& emit(std::string kind, Json payload = Json::object());

  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  std::map<std::string, std::size_t> counts() const;

  void write_jsonl(std::ostream& out) const;
  /// FNV-1a over the JSONL rendering.
  std::uint64_t digest() const;

  static std::vector<Event> read_jsonl(std::istream& in);

 private:
  const Scheduler* clock_;
  std::vector<Event> events_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace ngnqos
