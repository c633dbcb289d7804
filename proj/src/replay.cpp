#include "ngnqos/replay.hpp"

#include <set>

#include "ngnqos/core_json.hpp"

namespace ngnqos::replay {

namespace {

using Amounts = std::map<std::string, std::int64_t>;  // link -> kbit/s

Amounts amounts(const Json& reservations) {
  Amounts out;
  for (const auto& r : reservations) out[r.at("link").get<std::string>()] += r.at("amount").get<std::int64_t>();
  return out;
}

struct Grant {
  TransportServiceClass service_class = TransportServiceClass::BE;
  Amounts reserved;
  std::vector<std::pair<std::string, std::string>> gates;  // (flow, link)
};

class Checker {
 public:
  ReplayResult result;

  void feed(const Event& e) {
    ++result.events;
    if (have_prev_ && !(e.t_us > prev_t_ || (e.t_us == prev_t_ && e.seq > prev_seq_)))
      violation(e, "event out of (time, sequence) order");
    if (have_prev_ && e.seq <= prev_seq_) violation(e, "sequence number does not increase");
    have_prev_ = true;
    prev_t_ = e.t_us;
    prev_seq_ = e.seq;

    try {
      if (e.kind == "run.config")
        config(e);
      else if (e.kind == "racs.reserve")
        reserve(e);
      else if (e.kind == "racs.modify")
        modify(e);
      else if (e.kind == "racs.release")
        release(e);
      else if (e.kind == "racs.commit")
        commit(e);
      else if (e.kind == "nass.attach")
        attach(e);
      else if (e.kind == "nass.detach")
        default_gates_.erase(e.payload.at("ip_address").get<std::string>());
      else if (e.kind == "transport.pkt")
        packet(e);
    } catch (const std::exception& ex) {
      violation(e, std::string("malformed payload: ") + ex.what());
    }
  }

 private:
  void violation(const Event& e, const std::string& what) {
    result.violations.push_back("t=" + std::to_string(e.t_us) + " seq=" + std::to_string(e.seq) + " " + e.kind +
                                ": " + what);
  }

  void config(const Event& e) {
    for (const auto& l : e.payload.at("links")) {
      auto& s = result.links[l.at("link").get<std::string>()];
      s.capacity = l.at("capacity").get<std::int64_t>();
      for (const auto& [name, v] : l.at("limits").items())
        s.limit[*parse_service_class(name)] = v.get<std::int64_t>();
    }
  }

  void apply(const Event& e, TransportServiceClass c, const Amounts& delta, int sign) {
    for (const auto& [link, amount] : delta) {
      if (amount == 0) continue;
      auto& s = result.links[link];
      s.reserved[c] += sign * amount;
      s.total += sign * amount;
    }
    for (const auto& [link, amount] : delta) {
      auto& s = result.links[link];
      const std::int64_t r = s.reserved[c];
      if (r < 0) violation(e, link + " " + std::string(to_string(c)) + " reservation below zero");
      if (s.capacity >= 0) {
        auto lim = s.limit.find(c);
        if (lim != s.limit.end() && r > lim->second)
          violation(e, link + " " + std::string(to_string(c)) + " reserved " + std::to_string(r) +
                           " above class limit " + std::to_string(lim->second));
        if (s.total > s.capacity)
          violation(e, link + " total " + std::to_string(s.total) + " above capacity " + std::to_string(s.capacity));
      }
      s.peak[c] = std::max(s.peak[c], r);
      s.peak_total = std::max(s.peak_total, s.total);
    }
  }

  void reserve(const Event& e) {
    if (e.payload.value("result", "") != "granted") return;
    ++result.reservation_events;
    Grant g;
    g.service_class = e.payload.at("class").get<TransportServiceClass>();
    g.reserved = amounts(e.payload.at("reservations"));
    const auto id = e.payload.at("grant_id").get<std::string>();
    if (grants_.count(id)) violation(e, "grant " + id + " reserved twice");
    apply(e, g.service_class, g.reserved, +1);
    grants_[id] = std::move(g);
  }

  void modify(const Event& e) {
    if (e.payload.value("result", "") != "granted") return;
    ++result.reservation_events;
    const auto id = e.payload.at("grant_id").get<std::string>();
    auto it = grants_.find(id);
    if (it == grants_.end()) return violation(e, "modify of unknown grant " + id);
    auto old = amounts(e.payload.at("old_reservations"));
    if (old != it->second.reserved) violation(e, "old reservations differ from the replayed state of " + id);
    auto wanted = amounts(e.payload.at("new_reservations"));
    // Net change per link, so a swap is checked as one atomic step.
    Amounts delta = wanted;
    for (const auto& [link, amount] : it->second.reserved) delta[link] -= amount;
    apply(e, it->second.service_class, delta, +1);
    it->second.reserved = std::move(wanted);
  }

  void release(const Event& e) {
    if (e.payload.value("result", "released") == "denied") return;
    ++result.reservation_events;
    const auto id = e.payload.at("grant_id").get<std::string>();
    auto it = grants_.find(id);
    if (it == grants_.end()) return violation(e, "release of unknown grant " + id);
    if (amounts(e.payload.at("reservations")) != it->second.reserved)
      violation(e, "released amounts differ from the replayed state of " + id);
    apply(e, it->second.service_class, it->second.reserved, -1);
    for (const auto& key : it->second.gates) active_.erase(key);
    grants_.erase(it);
  }

  void commit(const Event& e) {
    const auto id = e.payload.at("grant_id").get<std::string>();
    auto it = grants_.find(id);
    if (it == grants_.end()) return violation(e, "commit of unknown grant " + id);
    for (const auto& p : e.payload.at("policies")) {
      const auto flow = p.at("flow_key").get<std::string>();
      for (const auto& l : p.at("links")) {
        std::pair key{flow, l.get<std::string>()};
        active_.insert(key);
        it->second.gates.push_back(key);
      }
    }
  }

  void attach(const Event& e) {
    if (e.payload.value("result", "") != "attached") return;
    default_gates_[e.payload.at("ip_address").get<std::string>()] = e.payload.at("gate").get<GateSetting>();
  }

  bool default_gate_passes(const std::string& flow) const {
    // "src>dst#session"
    auto gt = flow.find('>');
    auto hash = flow.find('#');
    if (gt == std::string::npos || hash == std::string::npos) return false;
    std::string src = flow.substr(0, gt), dst = flow.substr(gt + 1, hash - gt - 1);
    auto s = default_gates_.find(src);
    auto d = default_gates_.find(dst);
    return (s != default_gates_.end() && s->second.passes(dst)) ||
           (d != default_gates_.end() && d->second.passes(src));
  }

  void packet(const Event& e) {
    ++result.packet_events;
    const auto flow = e.payload.at("flow").get<std::string>();
    const auto link = e.payload.at("link").get<std::string>();
    const bool active = active_.count({flow, link}) > 0;
    const auto action = e.payload.at("action").get<std::string>();
    if (action == "pass") {
      if (e.payload.value("default_gate", false)) {
        if (active) violation(e, flow + " passed " + link + " on the default gate while a grant is installed");
        if (!default_gate_passes(flow)) violation(e, flow + " passed " + link + " through a closed default gate");
      } else if (!active) {
        violation(e, flow + " passed " + link + " outside any committed grant");
      }
    } else if (e.payload.value("reason", "") == "gate_closed" && active) {
      violation(e, flow + " hit a closed gate at " + link + " while its grant is installed");
    } else if (e.payload.value("reason", "") == "policed" && !active) {
      violation(e, flow + " policed at " + link + " without an installed policy");
    }
  }

  bool have_prev_ = false;
  SimTime prev_t_ = 0;
  std::uint64_t prev_seq_ = 0;
  std::map<std::string, Grant> grants_;
  std::set<std::pair<std::string, std::string>> active_;
  std::map<std::string, GateSetting> default_gates_;
};

}  // namespace

ReplayResult check(const std::vector<Event>& events) {
  Checker c;
  for (const auto& e : events) c.feed(e);
  return std::move(c.result);
}

std::vector<std::string> check_report(const ReplayResult& replay, const std::vector<Event>& events,
                                      const Json& report) {
  std::vector<std::string> out;
  for (const auto& l : report.at("links")) {
    const auto name = l.at("link").get<std::string>();
    auto it = replay.links.find(name);
    const LinkState empty;
    const LinkState& s = it == replay.links.end() ? empty : it->second;
    for (const auto& [cls, v] : l.at("peak").items()) {
      auto c = *parse_service_class(cls);
      auto p = s.peak.find(c);
      const std::int64_t derived = p == s.peak.end() ? 0 : p->second;
      if (derived != v.get<std::int64_t>())
        out.push_back(name + " " + cls + ": report peak " + std::to_string(v.get<std::int64_t>()) +
                      ", replayed peak " + std::to_string(derived));
    }
    if (s.peak_total != l.at("peak_total").get<std::int64_t>())
      out.push_back(name + ": report peak total " + std::to_string(l.at("peak_total").get<std::int64_t>()) +
                    ", replayed " + std::to_string(s.peak_total));
  }

  std::map<std::string, std::multiset<std::string>> logged;  // session -> reasons
  for (const auto& e : events)
    if (e.kind.rfind("racs.", 0) == 0 && e.payload.contains("reason") && e.payload.contains("session_id"))
      logged[e.payload["session_id"].get<std::string>()].insert(e.payload["reason"].get<std::string>());
  for (const auto& s : report.at("sessions")) {
    const auto id = s.at("session_id").get<std::string>();
    std::multiset<std::string> want;
    for (const auto& r : s.at("denial_reasons")) want.insert(r.get<std::string>());
    for (const auto& r : std::set<std::string>(want.begin(), want.end()))
      if (logged[id].count(r) < want.count(r))
        out.push_back("session " + s.at("label").get<std::string>() + " (" + id + "): denial '" + r +
                      "' has no matching racs event");
  }
  return out;
}

Json to_json(const ReplayResult& r) {
  Json links = Json::object();
  for (const auto& [name, s] : r.links) {
    Json peak = Json::object();
    for (const auto& [c, v] : s.peak) peak[std::string(to_string(c))] = v;
    links[name] = {{"capacity", s.capacity}, {"peak", peak}, {"peak_total", s.peak_total}};
  }
  return {{"ok", r.ok()},
          {"events", r.events},
          {"reservation_events", r.reservation_events},
          {"packet_events", r.packet_events},
          {"violations", r.violations},
          {"links", links}};
}

}  // namespace ngnqos::replay
