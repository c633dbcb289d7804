#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>

namespace ngnqos {

/// Simulation time in microseconds.
using SimTime = std::int64_t;

inline constexpr SimTime kMicrosPerMilli = 1000;
inline constexpr SimTime kMicrosPerSecond = 1000000;

/// Event queue ordered by (time, insertion sequence). Time never decreases.
class Scheduler {
 public:
  using Action = std::function<void()>;

  SimTime now() const { return now_; }

  /// Throws std::logic_error when `at` lies in the past.
  std::uint64_t schedule_at(SimTime at, Action action);
  std::uint64_t schedule_in(SimTime delay, Action action) {
    return schedule_at(now_ + delay, std::move(action));
  }

  /// Pops and runs the earliest event. Returns false when the queue is empty.
  bool step();
  /// Runs every event with time <= `limit`, then advances the clock to `limit`.
  void run_until(SimTime limit);
  void run();

  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t executed() const { return executed_; }

 private:
  std::map<std::pair<SimTime, std::uint64_t>, Action> queue_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t executed_ = 0;
};

}  // namespace ngnqos
