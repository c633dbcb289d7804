#include "ngnqos/scheduler.hpp"

#include <stdexcept>
#include <string>

namespace ngnqos {

std::uint64_t Scheduler::schedule_at(SimTime at, Action action) {
  if (at < now_)
    throw std::logic_error("event scheduled in the past: " + std::to_string(at) + " < " +
                           std::to_string(now_));
  std::uint64_t seq = next_seq_++;
  queue_.emplace(std::make_pair(at, seq), std::move(action));
  return seq;
}

bool Scheduler::step() {
  if (queue_.empty()) return false;
  auto node = queue_.extract(queue_.begin());
  now_ = node.key().first;
  ++executed_;
  node.mapped()();
  return true;
}

void Scheduler::run_until(SimTime limit) {
  while (!queue_.empty() && queue_.begin()->first.first <= limit) step();
  if (limit > now_) now_ = limit;
}

void Scheduler::run() {
  while (step()) {
  }
}

}  // namespace ngnqos
