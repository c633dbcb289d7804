#include "ngnqos/transport_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ngnqos/core_json.hpp"

namespace ngnqos::transport {

SimTime serialization_time(std::int64_t size_bytes, std::int64_t rate_kbps) {
  // bytes x 8 / (kbit/s) is ms, hence x 8000 for us.
  return (size_bytes * 8000 + rate_kbps / 2) / rate_kbps;
}

// ---------------------------------------------------------------------------

LinkQueues::LinkQueues(LinkRef link, std::int64_t rate_kbps, SimTime propagation, std::int64_t limit_bytes)
    : link_(std::move(link)), rate_kbps_(rate_kbps), propagation_(propagation), limit_bytes_(limit_bytes) {
  if (rate_kbps_ <= 0) throw std::invalid_argument("link " + link_.str() + ": rate must be positive");
  if (propagation_ < 0) throw std::invalid_argument("link " + link_.str() + ": negative propagation delay");
}

bool LinkQueues::empty() const {
  return std::all_of(queues_.begin(), queues_.end(), [](const auto& q) { return q.empty(); });
}

std::optional<Packet> LinkQueues::enqueue(Packet packet) {
  const std::size_t i = index(packet.service_class);
  auto& q = queues_[i];
  if (bytes_[i] + packet.size > limit_bytes_) {
    if (packet.service_class == TransportServiceClass::BE && packet.low_drop_precedence) {
      auto victim = std::find_if(q.rbegin(), q.rend(), [](const Packet& p) { return !p.low_drop_precedence; });
      if (victim != q.rend() && bytes_[i] - victim->size + packet.size <= limit_bytes_) {
        Packet evicted = std::move(*victim);
        q.erase(std::next(victim).base());
        bytes_[i] -= evicted.size;
        ++overflow_drops[i];
        bytes_[i] += packet.size;
        q.push_back(std::move(packet));
        return evicted;
      }
    }
    ++overflow_drops[i];
    return packet;
  }
  bytes_[i] += packet.size;
  q.push_back(std::move(packet));
  return std::nullopt;
}

Packet LinkQueues::pop(std::size_t i) {
  Packet p = std::move(queues_[i].front());
  queues_[i].pop_front();
  bytes_[i] -= p.size;
  ++sent_packets[i];
  sent_bytes[i] += static_cast<std::uint64_t>(p.size);
  return p;
}

Packet LinkQueues::dequeue() {
  if (!queues_[index(TransportServiceClass::EF)].empty()) return pop(index(TransportServiceClass::EF));

  const bool any_af = std::any_of(queues_.begin() + 1, queues_.begin() + 5, [](const auto& q) { return !q.empty(); });
  if (any_af) {
    for (;;) {
      const std::size_t i = 1 + rr_;
      if (queues_[i].empty()) {
        deficit_[rr_] = 0;
        rr_ = (rr_ + 1) % 4;
        fresh_turn_ = true;
        continue;
      }
      if (fresh_turn_) {
        deficit_[rr_] += kAfWeights[rr_] * kQuantumBytes;
        fresh_turn_ = false;
      }
      if (queues_[i].front().size <= deficit_[rr_]) {
        deficit_[rr_] -= queues_[i].front().size;
        return pop(i);
      }
      rr_ = (rr_ + 1) % 4;
      fresh_turn_ = true;
    }
  }
  return pop(index(TransportServiceClass::BE));
}

// ---------------------------------------------------------------------------

std::string_view to_string(SourceModel m) { return m == SourceModel::cbr ? "cbr" : "onoff"; }

std::optional<SourceModel> parse_source_model(std::string_view s) {
  if (s == "cbr") return SourceModel::cbr;
  if (s == "onoff") return SourceModel::onoff;
  return std::nullopt;
}

void TrafficSource::validate() const {
  const std::string who = "source " + flow_key.str() + ": ";
  if (rate_kbps <= 0) throw std::invalid_argument(who + "rate must be positive");
  if (packet_size < 64 || packet_size > 1500)
    throw std::invalid_argument(who + "packet size must be within 64-1500 bytes");
  if (start < 0 || stop < start) throw std::invalid_argument(who + "stop precedes start");
  if (path.empty()) throw std::invalid_argument(who + "empty path");
  if (model == SourceModel::onoff && (on_mean <= 0 || off_mean <= 0))
    throw std::invalid_argument(who + "on/off means must be positive");
}

double SecondBin::mean_delay_ms() const {
  return delivered ? static_cast<double>(delay_sum_us) / static_cast<double>(delivered) / 1000.0 : 0.0;
}

double SecondBin::jitter_ms() const {
  return jitter_samples ? static_cast<double>(jitter_sum_us) / static_cast<double>(jitter_samples) / 1000.0 : 0.0;
}

double SecondBin::loss() const {
  return generated ? static_cast<double>(dropped) / static_cast<double>(generated) : 0.0;
}

double FlowMeasurements::mean_delay_ms() const {
  return delivered ? static_cast<double>(delay_sum_us) / static_cast<double>(delivered) / 1000.0 : 0.0;
}

double FlowMeasurements::jitter_ms() const {
  return jitter_samples ? static_cast<double>(jitter_sum_us) / static_cast<double>(jitter_samples) / 1000.0 : 0.0;
}

double FlowMeasurements::loss() const {
  return generated ? static_cast<double>(dropped) / static_cast<double>(generated) : 0.0;
}

double FlowMeasurements::throughput_kbps() const {
  if (active_time <= 0) return 0.0;
  return static_cast<double>(bytes_delivered) * 8.0 / 1000.0 /
         (static_cast<double>(active_time) / kMicrosPerSecond);
}

double FlowMeasurements::throughput_kbps(std::size_t from_s, std::size_t to_s) const {
  if (to_s <= from_s) return 0.0;
  std::uint64_t bytes = 0;
  for (std::size_t s = from_s; s < to_s && s < seconds.size(); ++s) bytes += seconds[s].bytes_delivered;
  return static_cast<double>(bytes) * 8.0 / 1000.0 / static_cast<double>(to_s - from_s);
}

Json to_json(const FlowMeasurements& m) {
  Json series = Json::array();
  for (const auto& b : m.seconds)
    series.push_back({{"generated", b.generated},
                      {"delivered", b.delivered},
                      {"dropped", b.dropped},
                      {"delay_ms", b.mean_delay_ms()},
                      {"jitter_ms", b.jitter_ms()},
                      {"throughput_kbps", b.throughput_kbps()}});
  Json reasons = Json::object();
  for (const auto& [r, n] : m.drops_by_reason) reasons[std::string(to_string(r))] = n;
  return Json{{"flow", m.flow_key.str()},
              {"generated", m.generated},
              {"delivered", m.delivered},
              {"dropped", m.dropped},
              {"drops_by_reason", reasons},
              {"loss", m.loss()},
              {"mean_delay_ms", m.mean_delay_ms()},
              {"jitter_ms", m.jitter_ms()},
              {"throughput_kbps", m.throughput_kbps()},
              {"seconds", series}};
}

// ---------------------------------------------------------------------------

TransportSim::TransportSim(const std::vector<LinkConfig>& links, EnforcementRegistry& enforcement,
                           Scheduler& clock, EventLog& log, SimOptions options)
    : enforcement_(&enforcement), clock_(&clock), log_(&log), options_(options) {
  for (const auto& l : links) {
    // kbit/s x ms = bit
    const std::int64_t limit = std::max<std::int64_t>(1500, l.rate_kbps * (options_.queue_limit / kMicrosPerMilli) / 8);
    for (auto dir : {LinkDirection::up, LinkDirection::down}) {
      LinkRef ref{l.id, dir};
      if (!links_.emplace(ref, LinkQueues(ref, l.rate_kbps, l.propagation_delay, limit)).second)
        throw std::invalid_argument("duplicate link '" + l.id + "'");
    }
  }
}

void TransportSim::add_source(const TrafficSource& source) {
  source.validate();
  for (const auto& l : source.path)
    if (!links_.count(l)) throw std::invalid_argument("source " + source.flow_key.str() + ": unknown link " + l.str());
  if (flows_.count(source.flow_key))
    throw std::invalid_argument("duplicate flow " + source.flow_key.str());

  FlowState fs;
  fs.m.flow_key = source.flow_key;
  fs.path = source.path;
  SimTime stop = options_.horizon > 0 ? std::min(source.stop, options_.horizon) : source.stop;
  fs.m.active_time = std::max<SimTime>(0, stop - source.start);
  flows_.emplace(source.flow_key, std::move(fs));

  std::seed_seq seq{static_cast<std::uint32_t>(options_.seed), static_cast<std::uint32_t>(options_.seed >> 32),
                    static_cast<std::uint32_t>(sources_.size())};
  SourceState st{source, std::mt19937_64(seq), source.start, std::numeric_limits<SimTime>::max(), 0};
  if (source.model == SourceModel::onoff) st.period_end = source.start + exponential(st.rng, source.on_mean);
  sources_.push_back(std::move(st));
  schedule_next(sources_.size() - 1);
}

SimTime TransportSim::exponential(std::mt19937_64& rng, SimTime mean) {
  // u in (0, 1]
  const double u = static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
  return std::max<SimTime>(1, std::llround(-static_cast<double>(mean) * std::log(u)));
}

void TransportSim::schedule_next(std::size_t i) {
  SourceState& st = sources_[i];
  const TrafficSource& s = st.source;
  SimTime stop = options_.horizon > 0 ? std::min(s.stop, options_.horizon) : s.stop;
  SimTime t = st.period_start + static_cast<SimTime>(st.k) * s.interval_numerator() / s.rate_kbps;
  if (t >= st.period_end) {
    st.period_start = st.period_end + exponential(st.rng, s.off_mean);
    st.period_end = st.period_start + exponential(st.rng, s.on_mean);
    st.k = 0;
    t = st.period_start;
  }
  if (t >= stop) return;
  clock_->schedule_at(t, [this, i] { emit_packet(i); });
}

void TransportSim::emit_packet(std::size_t i) {
  SourceState& st = sources_[i];
  ++st.k;
  Packet p;
  p.id = next_packet_++;
  p.flow_key = st.source.flow_key;
  p.size = st.source.packet_size;
  p.created_at = clock_->now();
  ++generated_;
  FlowState& fs = flows_.at(p.flow_key);
  ++fs.m.generated;
  const auto bin = static_cast<std::size_t>(p.created_at / kMicrosPerSecond);
  if (fs.m.seconds.size() <= bin) fs.m.seconds.resize(bin + 1);
  ++fs.m.seconds[bin].generated;
  schedule_next(i);
  arrive(std::move(p));
}

void TransportSim::trace(const Packet& p, const LinkRef& where, std::string_view action,
                         std::optional<DropReason> reason, bool via_default_gate) {
  if (!options_.trace_packets) return;
  Json payload{{"pkt", p.id}, {"flow", p.flow_key.str()}, {"link", where.str()}, {"action", action}};
  if (action == "pass") {
    payload["dscp"] = p.dscp;
    if (via_default_gate) payload["default_gate"] = true;
  }
  if (reason) payload["reason"] = to_string(*reason);
  log_->emit("transport.pkt", std::move(payload));
}

void TransportSim::arrive(Packet p) {
  const FlowState& fs = flows_.at(p.flow_key);
  const LinkRef where = fs.path[p.hop];
  Verdict v = enforcement_->at(where).classify(p.flow_key, p.size, clock_->now(), p.hop == 0,
                                               &enforcement_->default_gates());
  if (!v.pass) {
    trace(p, where, "drop", v.reason, false);
    drop(std::move(p), *v.reason, where);
    return;
  }
  p.dscp = v.dscp;
  p.service_class = v.service_class;
  p.low_drop_precedence = v.low_drop_precedence;
  trace(p, where, "pass", std::nullopt, v.via_default_gate);

  LinkQueues& q = links_.at(where);
  if (auto rejected = q.enqueue(std::move(p))) {
    trace(*rejected, where, "drop", DropReason::queue_overflow, false);
    drop(std::move(*rejected), DropReason::queue_overflow, where);
  }
  try_start(q);
  check_conservation(q);
}

void TransportSim::try_start(LinkQueues& q) {
  if (q.busy || q.empty()) return;
  Packet p = q.dequeue();
  q.busy = true;
  const SimTime tx = serialization_time(p.size, q.rate_kbps());
  clock_->schedule_in(tx, [this, &q, p = std::move(p)]() mutable { finish(q, std::move(p)); });
}

void TransportSim::finish(LinkQueues& q, Packet p) {
  q.busy = false;
  ++p.hop;
  const bool last = p.hop == flows_.at(p.flow_key).path.size();
  clock_->schedule_in(q.propagation(), [this, last, p = std::move(p)]() mutable {
    if (last)
      deliver(std::move(p));
    else
      arrive(std::move(p));
  });
  try_start(q);
  check_conservation(q);
}

void TransportSim::check_conservation(const LinkQueues& q) {
  if (!q.busy && !q.empty()) ++idle_with_backlog_;
}

void TransportSim::deliver(Packet p) {
  p.delivered_at = clock_->now();
  ++delivered_;
  FlowState& fs = flows_.at(p.flow_key);
  const SimTime delay = *p.delivered_at - p.created_at;
  SecondBin& b = fs.m.seconds[static_cast<std::size_t>(p.created_at / kMicrosPerSecond)];
  ++b.delivered;
  ++fs.m.delivered;
  b.delay_sum_us += delay;
  fs.m.delay_sum_us += delay;
  b.bytes_delivered += static_cast<std::uint64_t>(p.size);
  fs.m.bytes_delivered += static_cast<std::uint64_t>(p.size);
  if (fs.last_delay) {
    const SimTime d = std::abs(delay - *fs.last_delay);
    b.jitter_sum_us += d;
    ++b.jitter_samples;
    fs.m.jitter_sum_us += d;
    ++fs.m.jitter_samples;
  }
  fs.last_delay = delay;
}

void TransportSim::drop(Packet p, DropReason reason, const LinkRef&) {
  p.dropped = reason;
  ++dropped_;
  FlowState& fs = flows_.at(p.flow_key);
  ++fs.m.dropped;
  ++fs.m.drops_by_reason[reason];
  ++fs.m.seconds[static_cast<std::size_t>(p.created_at / kMicrosPerSecond)].dropped;
}

std::map<FlowKey, FlowMeasurements> TransportSim::measurements(std::size_t seconds) const {
  std::map<FlowKey, FlowMeasurements> out;
  for (const auto& [key, fs] : flows_) {
    FlowMeasurements m = fs.m;
    if (m.seconds.size() < seconds) m.seconds.resize(seconds);
    out.emplace(key, std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------

TransportRun run(const std::vector<LinkConfig>& topology, const std::vector<TrafficSource>& sources,
                 const std::vector<PolicyChange>& timeline, SimTime duration, std::uint64_t seed,
                 bool trace_packets) {
  if (duration <= 0) throw std::invalid_argument("duration must be positive");
  Scheduler clock;
  EventLog log(clock);
  EnforcementRegistry enforcement;
  SimOptions options;
  options.seed = seed;
  options.trace_packets = trace_packets;
  options.horizon = duration;
  TransportSim sim(topology, enforcement, clock, log, options);
  for (const auto& change : timeline) {
    if (!sim.links().count(change.where))
      throw std::invalid_argument("policy change on unknown link " + change.where.str());
    if (change.at < 0) throw std::invalid_argument("policy change before time 0");
  }
  for (const auto& change : timeline) {
    clock.schedule_at(change.at, [&enforcement, &clock, change] {
      if (change.install)
        enforcement.at(change.where).install(*change.install, clock.now());
      else
        enforcement.at(change.where).remove(change.remove_key);
    });
  }
  for (const auto& s : sources) sim.add_source(s);
  clock.run();

  TransportRun out;
  const auto seconds = static_cast<std::size_t>((duration + kMicrosPerSecond - 1) / kMicrosPerSecond);
  out.flows = sim.measurements(seconds);
  out.digest = log.digest();
  out.events = log.events();
  out.work_conservation_violations = sim.work_conservation_violations();
  out.links = sim.links();
  return out;
}

}  // namespace ngnqos::transport
