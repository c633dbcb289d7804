// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ngnqos/core_json.hpp"
#include "ngnqos/harness.hpp"
#include "ngnqos/qoe.hpp"
#include "ngnqos/racs.hpp"
#include "ngnqos/replay.hpp"
#include "ngnqos/scenario.hpp"
#include "ngnqos/transport_sim.hpp"

using namespace ngnqos;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string scenario_path(const std::string& name) { return std::string(NGNQOS_SCENARIO_DIR) + "/" + name + ".json"; }

scenario::Scenario load(const std::string& name) { return scenario::parse_scenario(scenario_path(name)); }

std::vector<std::string> corpus() {
  std::vector<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(NGNQOS_SCENARIO_DIR))
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NGNQOS_CLI) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ngnqos_acceptance_" + std::to_string(::getpid()) + "_" + name);
}

// ---------------------------------------------------------------- AC1

Verdict capacity_safety() {
  const auto started = std::chrono::steady_clock::now();
  Scheduler clock;
  EventLog log(clock);
  transport::EnforcementRegistry enforcement;

  std::vector<nass::Subscription> subs;
  for (const char* id : {"east", "west"}) {
    nass::Subscription s;
    s.subscriber_id = id;
    s.credentials = "pw";
    s.qos_profile.requestor_name = "operator";
    s.qos_profile.maximum_priority = 15;
    s.qos_profile.ul_subscribed_bandwidth = 600;
    s.qos_profile.dl_subscribed_bandwidth = 600;
    subs.push_back(s);
  }
  nass::Nass nass({nass::AccessNetwork{"an-a", "xDSL", *Cidr::parse("10.1.0.0/24"), "acc-a", "rcf"},
                   nass::AccessNetwork{"an-b", "xDSL", *Cidr::parse("10.2.0.0/24"), "acc-b", "rcf"}},
                  subs, log, clock);

  racs::RacsConfig config;
  config.links = {LinkConfig{"core", 4000, kMicrosPerMilli, LinkConfig::default_shares()},
                  LinkConfig{"acc-a", 3000, kMicrosPerMilli, {{TransportServiceClass::EF, 0.4},
                                                             {TransportServiceClass::AF1, 0.3},
                                                             {TransportServiceClass::AF4, 0.2}}},
                  LinkConfig{"acc-b", 2500, kMicrosPerMilli, LinkConfig::default_shares()}};
  config.core_link = "core";
  config.resource_control = {racs::ResourceControlConfig{"rcf", {"xDSL"}}};

  // Limits written out from share x capacity, independent of the model.
  std::map<std::string, std::int64_t> capacity;
  std::map<std::pair<std::string, TransportServiceClass>, std::int64_t> limit;
  Json links = Json::array();
  for (const auto& l : config.links) {
    for (auto dir : {LinkDirection::up, LinkDirection::down}) {
      const std::string ref = LinkRef{l.id, dir}.str();
      capacity[ref] = l.rate_kbps;
      Json limits = Json::object();
      for (const auto& [c, share] : l.class_shares) {
        limit[{ref, c}] = static_cast<std::int64_t>(std::floor(share * static_cast<double>(l.rate_kbps)));
        limits[std::string(to_string(c))] = limit[{ref, c}];
      }
      links.push_back({{"link", ref}, {"capacity", l.rate_kbps}, {"limits", limits}});
    }
  }
  log.emit("run.config", {{"scenario", "capacity-safety"}, {"links", links}});

  racs::Racs racs(config, nass, enforcement, log, clock);
  nass::TerminalProfile terminal;
  terminal.connectivity.supported_interfaces = {"eth"};
  terminal.connectivity.current_interface = "eth";
  const std::string ip_a = nass.attach("east", "an-a", terminal, "pw").ip_address;
  const std::string ip_b = nass.attach("west", "an-b", terminal, "pw").ip_address;

  std::mt19937_64 rng(20261016);
  constexpr int kOps = 10000;
  int reserves = 0, modifies = 0, releases = 0, refused = 0, failures = 0;
  std::string first_failure;
  for (int op = 0; op < kOps; ++op) {
    const std::string sid = "s" + std::to_string(rng() % 64);
    const auto* held = racs.grant_for_session(sid);
    racs::ResourceRequest r;
    r.session_id = sid;
    r.subscriber_ip = held ? held->subscriber_ip : (rng() % 2 ? ip_a : ip_b);
    r.peer_ip = "192.0.2.1";
    static constexpr MediaType kMedia[] = {MediaType::voice, MediaType::video, MediaType::data};
    r.media_type = kMedia[rng() % 3];
    r.qos.ul_bandwidth = 1 + static_cast<std::int64_t>(rng() % 200);
    r.qos.dl_bandwidth = 1 + static_cast<std::int64_t>(rng() % 200);
    r.qos.priority = r.media_type == MediaType::data ? 8 : 5;
    r.floor = r.qos;
    r.requestor_name = "svc";
    if (!held) {
      r.kind = racs::RequestKind::reserve;
      ++reserves;
    } else if (rng() % 2) {
      r.kind = racs::RequestKind::modify;
      ++modifies;
    } else {
      r.kind = racs::RequestKind::release;
      ++releases;
    }
    auto resp = racs.handle(r);
    if (auto* d = resp.denial(); d && d->reason == racs::DenialReason::insufficient_resources) ++refused;

    std::map<std::pair<std::string, TransportServiceClass>, std::int64_t> sum;
    std::map<std::string, std::int64_t> total;
    for (const auto& g : racs.grants())
      for (const auto& res : g.reservations) {
        sum[{res.link.str(), g.service_class}] += res.amount;
        total[res.link.str()] += res.amount;
      }
    bool ok = racs.capacity_invariants_hold();
    for (const auto& [ref, model] : racs.links())
      for (auto c : kAllClasses) {
        auto s = sum.find({ref.str(), c});
        const std::int64_t mine = s == sum.end() ? 0 : s->second;
        auto l = limit.find({ref.str(), c});
        const std::int64_t lim = l == limit.end() ? 0 : l->second;
        if (model.reserved(c) != mine || (c != TransportServiceClass::BE && mine > lim)) ok = false;
      }
    for (const auto& [ref, t] : total)
      if (t > capacity[ref]) ok = false;
    if (!ok && failures++ == 0) first_failure = "op " + std::to_string(op);
  }

  auto replayed = replay::check(log.events());
  bool peaks_match = true;
  for (const auto& [ref, model] : racs.links()) {
    const auto& s = replayed.links[ref.str()];
    for (auto c : kAllClasses) {
      auto p = s.peak.find(c);
      if ((p == s.peak.end() ? 0 : p->second) != model.peak(c)) peaks_match = false;
    }
    if (s.peak_total != model.peak_total()) peaks_match = false;
  }

  const auto path = temp_file("ac1.jsonl");
  {
    std::ofstream out(path);
    for (const auto& e : log.events()) out << e.to_line() << '\n';
  }
  const int cli = run_cli("replay --check " + path.string());
  std::filesystem::remove(path);

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::ostringstream d;
  d << kOps << " ops (" << reserves << " reserve, " << modifies << " modify, " << releases << " release, " << refused
    << " refused for capacity), invariant failures " << failures << (failures ? " first at " + first_failure : "")
    << ", replay violations " << replayed.violations.size() << ", replay --check exit " << cli
    << ", peaks " << (peaks_match ? "match" : "differ") << ", " << secs << " s";
  return {failures == 0 && replayed.ok() && cli == 0 && peaks_match && refused > 0 && secs < 10.0, d.str()};
}

// ---------------------------------------------------------------- AC2

Verdict admission_arithmetic() {
  auto s = load("overload");
  // EF share of the core link and the per-session request, read from the scenario.
  double ef_share = 0;
  std::int64_t core_rate = 0;
  for (const auto& l : s.links)
    if (l.id == s.core_link) {
      core_rate = l.rate_kbps;
      ef_share = l.class_shares.at(TransportServiceClass::EF);
    }
  std::int64_t request = 0;
  for (const auto& svc : s.services)
    if (svc.service_id == "voice") request = svc.required_qos.ul_bandwidth;
  const std::int64_t ef_limit = static_cast<std::int64_t>(std::floor(ef_share * static_cast<double>(core_rate)));
  const std::int64_t requests = static_cast<std::int64_t>(
      std::count_if(s.actions.begin(), s.actions.end(), [](const auto& a) { return a.op == scenario::ActionOp::initiate; }));
  const std::int64_t admit = std::min(requests, ef_limit / request);

  auto result = harness::run_end_to_end(s);
  std::int64_t active = 0, denied = 0, other = 0;
  for (const auto& o : result.report.sessions) {
    if (o.final_state == "Active")
      ++active;
    else if (o.final_state == "Rejected" && o.denial_reasons == std::vector<std::string>{"insufficient_resources"})
      ++denied;
    else
      ++other;
  }
  std::ostringstream d;
  d << "EF limit " << ef_limit << " / " << request << " kbit/s -> expect " << admit << " admitted of " << requests
    << "; got " << active << " active, " << denied << " denied insufficient_resources, " << other << " other";
  return {ef_limit == 300 && requests == 11 && active == admit && denied == requests - admit && other == 0, d.str()};
}

// ---------------------------------------------------------------- AC3

Verdict enforcement_soundness() {
  std::size_t packets = 0, granted_pass = 0, default_pass = 0, gate_drops = 0, violations = 0;
  std::string first;
  for (const auto& name : corpus()) {
    harness::RunOptions opts;
    opts.trace_packets = true;
    auto result = harness::run_end_to_end(load(name), opts);
    auto r = replay::check(result.events);
    packets += r.packet_events;
    violations += r.violations.size();
    if (first.empty() && !r.violations.empty()) first = name + ": " + r.violations.front();
    for (const auto& e : result.events) {
      if (e.kind != "transport.pkt") continue;
      if (e.payload["action"] == "pass")
        (e.payload.value("default_gate", false) ? default_pass : granted_pass)++;
      else if (e.payload.value("reason", "") == "gate_closed")
        ++gate_drops;
    }
  }
  std::ostringstream d;
  d << packets << " traced decisions over the corpus: " << granted_pass << " passes inside a grant, " << default_pass
    << " on open default gates, " << gate_drops << " gate-closed drops, " << violations << " violations";
  if (!first.empty()) d << " (" << first << ")";
  return {violations == 0 && granted_pass > 0 && gate_drops > 0, d.str()};
}

// ---------------------------------------------------------------- AC4 / AC5

const scenario::SourceSpec* source(const scenario::Scenario& s, const std::string& session) {
  for (const auto& src : s.sources)
    if (src.session == session) return &src;
  return nullptr;
}

const harness::FlowOutcome* flow(const harness::RunReport& r, const std::string& session) {
  for (const auto& f : r.flows)
    if (f.session == session && f.direction == LinkDirection::up) return &f;
  return nullptr;
}

std::int64_t core_rate(const scenario::Scenario& s) {
  for (const auto& l : s.links)
    if (l.id == s.core_link) return l.rate_kbps;
  return 0;
}

Verdict starvation() {
  auto s = load("starvation");
  const auto* ef = source(s, "ef");
  const auto* be = source(s, "data");
  if (!ef || !be) return {false, "scenario lacks the ef or data source"};
  const double load_factor = static_cast<double>(ef->rate_kbps) / static_cast<double>(core_rate(s));

  auto result = harness::run_end_to_end(s);
  const auto* f = flow(result.report, "data");
  const auto* e = flow(result.report, "ef");
  if (!f || !f->started || !e || !e->started) return {false, "flows did not start"};
  const std::size_t end_s = static_cast<std::size_t>(s.duration / kMicrosPerSecond);
  const double got = f->measurements.throughput_kbps(end_s - 30, end_s);
  const double ratio = got / static_cast<double>(be->rate_kbps);
  std::ostringstream d;
  d << "EF offered " << ef->rate_kbps << " kbit/s = " << load_factor << "x core; BE delivered " << got
    << " kbit/s over seconds " << end_s - 30 << "-" << end_s << " = " << ratio * 100 << "% of " << be->rate_kbps;
  return {std::abs(load_factor - 1.2) < 1e-9 && ratio < 0.01, d.str()};
}

Verdict guaranteed() {
  auto base = load("starvation");
  auto s = load("guaranteed");
  const auto* ef = source(s, "ef");
  const auto* af = source(s, "data");
  const bool same_load = ef && af && source(base, "ef") && source(base, "data") && *ef == *source(base, "ef") &&
                         *af == *source(base, "data") && core_rate(s) == core_rate(base);
  if (!same_load) return {false, "EF/data sources differ from the starvation scenario"};

  auto result = harness::run_end_to_end(s);
  const auto* f = flow(result.report, "data");
  const harness::SessionOutcome* session = nullptr;
  for (const auto& o : result.report.sessions)
    if (o.label == "data") session = &o;
  if (!f || !f->started || !session || !session->granted_qos) return {false, "data session not admitted"};

  // Admitted class and policer rate from the commit in the log.
  std::string cls;
  std::int64_t policer = 0;
  for (const auto& e : result.events)
    if (e.kind == "racs.commit" && e.payload["session_id"] == session->session_id) {
      cls = e.payload["class"].get<std::string>();
      policer = e.payload["policies"][0]["rate_kbps"].get<std::int64_t>();
    }
  const std::size_t end_s = static_cast<std::size_t>(s.duration / kMicrosPerSecond);
  const double got = f->measurements.throughput_kbps(end_s - 30, end_s);
  const double ratio = got / static_cast<double>(af->rate_kbps);
  std::ostringstream d;
  d << "data admitted as " << cls << " with policer " << policer << " kbit/s under the same 1.2x EF source; delivered "
    << got << " kbit/s over the final 30 s = " << ratio * 100 << "% of " << af->rate_kbps;
  return {cls.rfind("AF", 0) == 0 && policer == af->rate_kbps && ratio >= 0.95, d.str()};
}

// ---------------------------------------------------------------- AC6

Verdict token_bucket() {
  constexpr std::int64_t kRate = 1000;
  constexpr std::int64_t kPacket = 500;
  const SimTime duration = 60 * kMicrosPerSecond;
  const FlowKey key{"10.0.0.1", "192.0.2.1", "tb"};
  const LinkRef hop{"l", LinkDirection::up};
  std::vector<LinkConfig> topo = {{"l", 100000, kMicrosPerMilli, {}}};

  TrafficPolicy p;
  p.flow_key = key;
  p.grant_id = "G1";
  p.service_class = TransportServiceClass::AF1;
  p.gate = GateSetting{GateState::open, {key.dst}};
  p.policer = PolicerSpec{kRate, kRate * 20};

  bool ok = true;
  std::ostringstream d;
  for (double factor : {0.5, 1.0, 2.0}) {
    transport::TrafficSource src;
    src.flow_key = key;
    src.path = {hop};
    src.rate_kbps = static_cast<std::int64_t>(factor * kRate);
    src.packet_size = kPacket;
    src.stop = duration;
    auto r = transport::run(topo, {src}, {transport::PolicyChange{0, hop, p, {}}}, duration, 1);
    const auto& m = r.flows.at(key);
    auto it = m.drops_by_reason.find(transport::DropReason::policed);
    const double policed = it == m.drops_by_reason.end() ? 0.0 : static_cast<double>(it->second);
    const double conform = 1.0 - policed / static_cast<double>(m.generated);
    const double expected = std::min(1.0, 1.0 / factor);
    ok = ok && std::abs(conform - expected) <= 0.02 && m.dropped == static_cast<std::uint64_t>(policed);
    d << factor << "x: conform " << conform << " (expect " << expected << ") ";
  }
  return {ok, d.str()};
}

// ---------------------------------------------------------------- AC7

double poly_mos(double delay, double jitter, double loss) {
  const double d = delay + 2.0 * jitter + 10.0;
  double r = 93.2 - 0.024 * d;
  if (d > 177.3) r -= 0.11 * (d - 177.3);
  r -= 30.0 * std::log(1.0 + 15.0 * loss);
  if (r <= 0) return 1.0;
  if (r >= 100) return 4.5;
  const double m = 1.0 + 0.035 * r + 7.0e-6 * r * (r - 60.0) * (100.0 - r);
  // the polynomial dips below 1 for small R; the scale floor applies
  return m < 1.0 ? 1.0 : (m > 5.0 ? 5.0 : m);
}

Verdict mos_pipeline() {
  const double at_zero = qoe::mos(0, 0, 0);
  const double oracle = poly_mos(0, 0, 0);
  double grid[10][10][10];
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      for (int k = 0; k < 10; ++k) grid[i][j][k] = qoe::mos(500.0 * i / 9, 100.0 * j / 9, 0.5 * k / 9);
  int violations = 0;
  double worst_gap = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      for (int k = 0; k < 10; ++k) {
        if (i + 1 < 10 && grid[i + 1][j][k] > grid[i][j][k]) ++violations;
        if (j + 1 < 10 && grid[i][j + 1][k] > grid[i][j][k]) ++violations;
        if (k + 1 < 10 && grid[i][j][k + 1] > grid[i][j][k]) ++violations;
        worst_gap = std::max(worst_gap, std::abs(grid[i][j][k] - poly_mos(500.0 * i / 9, 100.0 * j / 9, 0.5 * k / 9)));
      }
  std::ostringstream d;
  d << "mos(0,0,0) = " << at_zero << ", polynomial " << oracle << ", grid deviation " << worst_gap << ", "
    << violations << " monotonicity violations on 10x10x10";
  return {std::abs(at_zero - 4.404) <= 0.005 && std::abs(at_zero - oracle) <= 0.005 && worst_gap < 1e-9 &&
              violations == 0,
          d.str()};
}

// ---------------------------------------------------------------- AC8

Verdict mode_equivalence() {
  int differ = 0;
  std::string which;
  const auto names = corpus();
  for (const auto& name : names) {
    auto s = load(name);
    harness::RunOptions nd, tk;
    nd.mode_override = ims::ScenarioMode::network_driven;
    tk.mode_override = ims::ScenarioMode::token;
    const auto a = harness::granted_qos_map(harness::run_end_to_end(s, nd).report).dump();
    const auto b = harness::granted_qos_map(harness::run_end_to_end(s, tk).report).dump();
    if (a != b) {
      ++differ;
      which += " " + name;
    }
  }
  std::ostringstream d;
  d << names.size() << " scenarios, " << differ << " with differing granted_qos maps" << which;
  return {differ == 0 && !names.empty(), d.str()};
}

// ---------------------------------------------------------------- AC9

Verdict determinism() {
  int differ = 0;
  std::size_t events = 0;
  std::string which;
  const auto names = corpus();
  for (const auto& name : names) {
    auto s = load(name);
    harness::RunOptions opts;
    opts.trace_packets = true;
    auto a = harness::run_end_to_end(s, opts);
    auto b = harness::run_end_to_end(s, opts);
    std::string la, lb;
    for (const auto& e : a.events) la += e.to_line() + "\n";
    for (const auto& e : b.events) lb += e.to_line() + "\n";
    events += a.events.size();
    if (la != lb || a.report.log_digest != b.report.log_digest ||
        harness::to_json(a.report) != harness::to_json(b.report)) {
      ++differ;
      which += " " + name;
    }
  }
  std::ostringstream d;
  d << names.size() << " scenarios run twice (" << events << " events each pass), " << differ << " differ" << which;
  return {differ == 0 && !names.empty(), d.str()};
}

// ---------------------------------------------------------------- AC10

// Allowed session state changes, written out independently of the model.
const std::set<std::pair<std::string, std::string>> kLegal = {
    {"Idle", "Authenticating"},
    {"Authenticating", "Triggering"},
    {"Authenticating", "Rejected"},
    {"Triggering", "ResourceRequested"},
    {"ResourceRequested", "Active"},
    {"ResourceRequested", "Rejected"},
    {"Active", "Renegotiating"},
    {"Active", "Terminated"},
    {"Renegotiating", "Active"},
    {"Renegotiating", "Terminated"},
};

const char* kBase = R"({
  "name": "state-machine",
  "duration_s": 4,
  "topology": {"core_link": "core", "links": [
    {"id": "core", "rate_kbps": 1000},
    {"id": "dsl", "rate_kbps": 2000}
  ]},
  "resource_control": [{"id": "rcf", "access_network_types": ["xDSL"]}],
  "access_networks": [{"id": "dsl-1", "type": "xDSL", "pool": "10.0.0.0/24", "link": "dsl",
                       "racs_point_of_contact": "rcf"}],
  "services": [
    {"id": "voice", "media_type": "voice", "peer": "192.0.2.1",
     "required_qos": {"ul_bandwidth": 100, "dl_bandwidth": 100, "max_delay": 150, "priority": 5}},
    {"id": "video", "media_type": "video", "peer": "192.0.2.2", "min_fraction": 0.5,
     "required_qos": {"ul_bandwidth": 100, "dl_bandwidth": 100, "max_delay": 300, "priority": 4}}
  ],
  "actions": [],
  "sources": []
})";

Json random_scenario(std::mt19937_64& rng) {
  Json j = Json::parse(kBase);
  static const std::vector<std::string> kSubs = {"ann", "ben", "cat"};
  static const std::vector<std::string> kModes = {"network_driven", "token", "device_driven"};
  for (const auto& id : kSubs)
    j["subscribers"].push_back({{"id", id},
                                {"credentials", "pw"},
                                {"qos_profile",
                                 {{"maximum_priority", 15},
                                  {"ul_subscribed_bandwidth", 500},
                                  {"dl_subscribed_bandwidth", 500}}},
                                {"service_profile",
                                 {{"credentials", "sip"},
                                  {"subscribed_services", id == "cat" ? Json{"voice"} : Json{"voice", "video"}}}}});
  static constexpr std::int64_t kDelays[] = {0, 1, 5, 20, 60};
  j["signaling_delay_ms"] = kDelays[rng() % 5];
  j["token_redeem_delay_ms"] = kDelays[rng() % 5];

  double t = 0;
  std::vector<std::string> labels;
  if (rng() % 4)
    for (const auto& id : kSubs) {
      j["actions"].push_back({{"at_ms", t}, {"op", "attach"}, {"subscriber", id}, {"access_network", "dsl-1"}});
      j["actions"].push_back({{"at_ms", t + 0.5}, {"op", "register"}, {"subscriber", id}});
    }
  const int n = 6 + static_cast<int>(rng() % 14);
  for (int i = 0; i < n; ++i) {
    t += 1 + static_cast<double>(rng() % 120);
    const std::string sub = kSubs[rng() % kSubs.size()];
    Json a = {{"at_ms", t}};
    const auto pick = rng() % 100;
    if (pick < 8 || (labels.empty() && pick < 30)) {
      a["op"] = "attach";
      a["subscriber"] = sub;
      a["access_network"] = "dsl-1";
      if (rng() % 10 == 0) a["credentials"] = "wrong";
    } else if (pick < 16) {
      a["op"] = "register";
      a["subscriber"] = sub;
      if (rng() % 10 == 0) a["credentials"] = "wrong";
    } else if (pick < 48 || labels.empty()) {
      const std::string label = "L" + std::to_string(labels.size());
      labels.push_back(label);
      a["op"] = "initiate";
      a["subscriber"] = sub;
      a["service"] = rng() % 2 ? "voice" : "video";
      a["label"] = label;
      a["mode"] = kModes[rng() % kModes.size()];
    } else if (pick < 80) {
      a["op"] = "renegotiate";
      a["label"] = labels[rng() % labels.size()];
      const std::int64_t bw = 20 + static_cast<std::int64_t>(rng() % 380);
      a["qos"] = {{"ul_bandwidth", bw}, {"dl_bandwidth", bw}, {"priority", 5}};
      a["initiator"] = rng() % 2 ? "user" : "network";
    } else if (pick < 94) {
      a["op"] = "terminate";
      a["label"] = labels[rng() % labels.size()];
    } else {
      a["op"] = "detach";
      a["subscriber"] = sub;
    }
    j["actions"].push_back(a);
  }
  j["duration_s"] = std::ceil(t / 1000.0) + 2;
  return j;
}

struct SessionTrack {
  std::string state = "Idle";
  std::optional<Json> held;     // qos of the live RACS grant
  std::optional<Json> before;   // held when the renegotiation started
  bool expect_restore = false;  // next transition must be Renegotiating -> Active
};

Verdict state_machine_safety() {
  constexpr int kRuns = 10000;
  std::mt19937_64 rng(7);
  std::size_t transitions = 0, rollbacks = 0, illegal = 0, bad_rollbacks = 0, replay_failures = 0, errors = 0;
  std::set<std::pair<std::string, std::string>> seen;
  std::string first;
  auto note = [&](const std::string& what) {
    if (first.empty()) first = what;
  };

  for (int run = 0; run < kRuns; ++run) {
    scenario::Scenario s;
    try {
      s = scenario::from_json(random_scenario(rng));
    } catch (const std::exception& e) {
      ++errors;
      note(std::string("generator: ") + e.what());
      continue;
    }
    harness::RunResult result;
    try {
      result = harness::run_end_to_end(s);
    } catch (const std::exception& e) {
      ++errors;
      note("run " + std::to_string(run) + ": " + e.what());
      continue;
    }

    std::map<std::string, SessionTrack> track;
    for (const auto& e : result.events) {
      const std::string sid = e.payload.value("session_id", "");
      if (e.kind == "ims.session.state") {
        auto& t = track[sid];
        const auto from = e.payload["from"].get<std::string>();
        const auto to = e.payload["to"].get<std::string>();
        ++transitions;
        seen.insert({from, to});
        if (from != t.state || !kLegal.count({from, to})) {
          ++illegal;
          note("run " + std::to_string(run) + " " + sid + ": " + from + "->" + to + " while in " + t.state);
        }
        if (t.expect_restore && !(from == "Renegotiating" && to == "Active")) {
          ++bad_rollbacks;
          note("run " + std::to_string(run) + " " + sid + ": rollback went to " + to);
        }
        t.expect_restore = false;
        t.state = to;
      } else if ((e.kind == "racs.reserve" || e.kind == "racs.modify") && e.payload.value("result", "") == "granted") {
        track[sid].held = e.payload["qos"];
      } else if (e.kind == "racs.release" && e.payload.value("result", "released") != "denied") {
        track[sid].held.reset();
      } else if (e.kind == "ims.renegotiate") {
        track[sid].before = track[sid].held;
      } else if (e.kind == "ims.finalize" && e.payload["result"] == "rolled_back") {
        auto& t = track[sid];
        ++rollbacks;
        t.expect_restore = true;
        if (t.held != t.before || !t.held) {
          ++bad_rollbacks;
          note("run " + std::to_string(run) + " " + sid + ": grant changed across a failed renegotiation");
        }
      }
    }

    for (const auto& o : result.report.sessions) {
      if (o.final_state != "Active") continue;
      const auto& t = track[o.session_id];
      const bool same = t.held && o.granted_qos && Json(*o.granted_qos) == *t.held;
      if (!same) {
        ++bad_rollbacks;
        note("run " + std::to_string(run) + " " + o.label + ": operation point differs from the RACS grant");
      }
    }

    auto r = replay::check(result.events);
    if (!r.ok() || !result.report.capacity_invariants_hold) {
      ++replay_failures;
      note("run " + std::to_string(run) + ": " + (r.ok() ? "capacity invariant" : r.violations.front()));
    }
  }

  std::ostringstream d;
  d << kRuns << " random sequences, " << transitions << " transitions (" << seen.size() << " of " << kLegal.size()
    << " legal edges exercised), " << illegal << " illegal, " << rollbacks << " rollbacks, " << bad_rollbacks
    << " incorrect, " << replay_failures << " replay failures, " << errors << " run errors";
  if (!first.empty()) d << "; first: " << first;
  return {illegal == 0 && bad_rollbacks == 0 && replay_failures == 0 && errors == 0 && rollbacks > 0 &&
              seen.size() == kLegal.size(),
          d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"AC1 capacity safety", capacity_safety},
      {"AC2 admission arithmetic", admission_arithmetic},
      {"AC3 enforcement soundness", enforcement_soundness},
      {"AC4 starvation", starvation},
      {"AC5 guaranteed AF contrast", guaranteed},
      {"AC6 token bucket conformance", token_bucket},
      {"AC7 MOS pipeline", mos_pipeline},
      {"AC8 mode equivalence", mode_equivalence},
      {"AC9 determinism", determinism},
      {"AC10 state machine safety", state_machine_safety},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << name << ": " << (v.pass ? "PASS" : "FAIL") << " (" << v.detail << ")" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
