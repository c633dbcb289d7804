#include "ngnqos/event_log.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace ngnqos {

std::string Event::to_line() const {
  Json j = {{"t_us", t_us}, {"seq", seq}, {"kind", kind}, {"payload", payload}};
  return j.dump();
}

Event Event::from_line(const std::string& line) {
  Json j = Json::parse(line);
  Event e;
  e.t_us = j.at("t_us").get<SimTime>();
  e.seq = j.at("seq").get<std::uint64_t>();
  e.kind = j.at("kind").get<std::string>();
  e.payload = j.value("payload", Json::object());
  return e;
}

const Event& EventLog::emit(std::string kind, Json payload) {
  events_.push_back(Event{clock_->now(), events_.size(), std::move(kind), std::move(payload)});
  return events_.back();
}

std::map<std::string, std::size_t> EventLog::counts() const {
  std::map<std::string, std::size_t> out;
  for (const Event& e : events_) ++out[e.kind];
  return out;
}

void EventLog::write_jsonl(std::ostream& out) const {
  for (const Event& e : events_) out << e.to_line() << '\n';
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t EventLog::digest() const {
  std::uint64_t h = fnv1a64({});
  for (const Event& e : events_) {
    h = fnv1a64(e.to_line(), h);
    h = fnv1a64("\n", h);
  }
  return h;
}

std::vector<Event> EventLog::read_jsonl(std::istream& in) {
  std::vector<Event> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(Event::from_line(line));
    } catch (const std::exception& ex) {
      throw std::runtime_error("event log line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace ngnqos
