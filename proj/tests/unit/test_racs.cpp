#include <doctest.h>

#include <random>

#include "ngnqos/racs.hpp"

using namespace ngnqos;
using namespace ngnqos::racs;

namespace {

nass::Subscription subscription(const std::string& id) {
  nass::Subscription s;
  s.subscriber_id = id;
  s.credentials = "pw";
  s.qos_profile.requestor_name = "operator";
  s.qos_profile.maximum_priority = 8;
  s.qos_profile.ul_subscribed_bandwidth = 500;
  s.qos_profile.dl_subscribed_bandwidth = 1000;
  return s;
}

nass::TerminalProfile terminal() {
  nass::TerminalProfile t;
  t.connectivity.supported_interfaces = {"eth"};
  t.connectivity.current_interface = "eth";
  return t;
}

RacsConfig base_config() {
  RacsConfig c;
  c.links = {LinkConfig{"core", 1000, kMicrosPerMilli, LinkConfig::default_shares()},
             LinkConfig{"dsl", 2000, kMicrosPerMilli, LinkConfig::default_shares()},
             LinkConfig{"thin", 500, kMicrosPerMilli, LinkConfig::default_shares()}};
  c.core_link = "core";
  c.resource_control = {ResourceControlConfig{"rcf-fixed", {"xDSL"}},
                        ResourceControlConfig{"rcf-wlan", {"WLAN"}}};
  return c;
}

struct Fixture {
  Scheduler clock;
  EventLog log{clock};
  nass::Nass nass;
  transport::EnforcementRegistry enforcement;
  Racs racs;
  std::string ip;       // alice on dsl
  std::string thin_ip;  // bob on the thin access link

  explicit Fixture(RacsConfig config = base_config())
      : nass({nass::AccessNetwork{"dsl-1", "xDSL", *Cidr::parse("10.0.1.0/24"), "dsl", "rcf-fixed"},
              nass::AccessNetwork{"wlan-1", "WLAN", *Cidr::parse("10.0.2.0/24"), "thin", "rcf-wlan"}},
             {subscription("alice"), subscription("bob"), subscription("carol")}, log, clock),
        racs(std::move(config), nass, enforcement, log, clock) {
    ip = nass.attach("alice", "dsl-1", terminal(), "pw").ip_address;
    thin_ip = nass.attach("bob", "wlan-1", terminal(), "pw").ip_address;
  }

  ResourceRequest voice(const std::string& session, std::int64_t bw, const std::string& from = "") {
    ResourceRequest r;
    r.session_id = session;
    r.subscriber_ip = from.empty() ? ip : from;
    r.peer_ip = "192.0.2.10";
    r.media_type = MediaType::voice;
    r.qos.ul_bandwidth = bw;
    r.qos.dl_bandwidth = bw;
    r.qos.priority = 5;
    r.floor = r.qos;
    r.requestor_name = "voice-svc";
    return r;
  }
};

LinkRef up(const std::string& id) { return {id, LinkDirection::up}; }
LinkRef down(const std::string& id) { return {id, LinkDirection::down}; }

std::optional<DenialReason> reason(const RacsResponse& r) {
  if (auto* d = r.denial()) return d->reason;
  return std::nullopt;
}

// Only '*' and literal characters, enough for the patterns used below.
bool star_match(std::string_view p, std::string_view s) {
  if (p.empty()) return s.empty();
  if (p[0] == '*') return star_match(p.substr(1), s) || (!s.empty() && star_match(p, s.substr(1)));
  return !s.empty() && p[0] == s[0] && star_match(p.substr(1), s.substr(1));
}

}  // namespace

TEST_CASE("class limit is the floor of share times capacity") {
  LinkCapacityModel m(up("x"), 1000, LinkConfig::default_shares());
  CHECK(m.limit(TransportServiceClass::EF) == 300);
  CHECK(m.limit(TransportServiceClass::AF1) == 125);
  CHECK(m.limit(TransportServiceClass::BE) == 0);
  LinkCapacityModel odd(up("y"), 333, {{TransportServiceClass::EF, 0.3}});
  CHECK(odd.limit(TransportServiceClass::EF) == 99);
  CHECK_THROWS_AS(m.apply(TransportServiceClass::EF, 301), std::logic_error);
  CHECK_THROWS_AS(m.apply(TransportServiceClass::EF, -1), std::logic_error);
}

TEST_CASE("EF admission on a 1000 kbit/s core fills exactly to 300") {
  Fixture f;
  CHECK(f.racs.handle(f.voice("s1", 100)).granted());
  CHECK(f.racs.handle(f.voice("s2", 200)).granted());
  CHECK(f.racs.link(up("core")).reserved(TransportServiceClass::EF) == 300);
  CHECK(f.racs.link(down("core")).reserved(TransportServiceClass::EF) == 300);
  auto third = f.racs.handle(f.voice("s3", 1));
  CHECK(reason(third) == DenialReason::insufficient_resources);
  CHECK(f.racs.link(up("core")).reserved(TransportServiceClass::EF) == 300);
  CHECK(f.racs.capacity_invariants_hold());
}

TEST_CASE("subscription and priority checks precede policy") {
  Fixture f;
  auto r = f.voice("s1", 100);
  r.qos.ul_bandwidth = 600;
  CHECK(reason(f.racs.handle(r)) == DenialReason::exceeds_subscription);
  r = f.voice("s2", 100);
  r.qos.priority = 12;
  CHECK(reason(f.racs.handle(r)) == DenialReason::exceeds_priority);
  CHECK(f.racs.grants().empty());
}

TEST_CASE("policy cap downgrades to the cap when the floor allows it") {
  auto cfg = base_config();
  ServicePolicy p;
  p.policy_id = "voice-cap";
  p.match.media_type = MediaType::voice;
  p.limits = {300, 300, 0, 0, 0.0, 15};
  p.precedence = 10;
  cfg.policies = {p};
  cfg.links[0].rate_kbps = 2000;
  Fixture f(cfg);

  auto r = f.voice("s1", 500);
  r.floor.ul_bandwidth = r.floor.dl_bandwidth = 200;
  auto resp = f.racs.handle(r);
  REQUIRE(resp.granted());
  const auto& g = std::get<ResourceGrant>(resp.outcome);
  CHECK(g.qos.ul_bandwidth == 300);
  CHECK(g.qos.dl_bandwidth == 300);
  CHECK(g.policy_id == "voice-cap");

  auto strict = f.voice("s2", 500);
  strict.floor.ul_bandwidth = strict.floor.dl_bandwidth = 400;
  CHECK(reason(f.racs.handle(strict)) == DenialReason::policy_violation);
}

TEST_CASE("requests tighter than the policy delay bound violate policy") {
  auto cfg = base_config();
  ServicePolicy p;
  p.policy_id = "slow";
  p.limits = {500, 1000, 100, 0, 0.0, 15};
  cfg.policies = {p};
  Fixture f(cfg);
  auto r = f.voice("s1", 50);
  r.qos.max_delay = 50;
  CHECK(reason(f.racs.handle(r)) == DenialReason::policy_violation);
  r.session_id = "s2";
  r.qos.max_delay = 150;
  CHECK(f.racs.handle(r).granted());
}

TEST_CASE("policy choice equals the highest-precedence match") {
  Fixture f;
  auto record = *f.nass.find_by_subscriber("alice");
  std::mt19937_64 rng(7);
  const std::vector<std::string> names = {"voice-svc", "video-svc", "data-x"};
  const std::vector<std::string> globs = {"*", "voice-*", "*-svc", "video-svc"};
  const std::vector<std::string> subs = {"alice", "al*", "bob", "*"};
  for (int round = 0; round < 200; ++round) {
    std::vector<ServicePolicy> policies;
    std::vector<int> precedences = {1, 2, 3, 4, 5, 6, 7, 8};
    std::shuffle(precedences.begin(), precedences.end(), rng);
    int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      ServicePolicy p;
      p.policy_id = "p" + std::to_string(i);
      p.precedence = precedences[i];
      if (rng() % 2) p.match.media_type = kAllMediaTypes[rng() % kAllMediaTypes.size()];
      if (rng() % 2) p.match.requestor_name = globs[rng() % globs.size()];
      if (rng() % 3 == 0) p.match.access_network_type = rng() % 2 ? "xDSL" : "WLAN";
      if (rng() % 3 == 0) p.match.subscriber_pattern = subs[rng() % subs.size()];
      policies.push_back(p);
    }
    PolicyRepository repo(policies);
    ResourceRequest req = f.voice("s", 10);
    req.media_type = kAllMediaTypes[rng() % kAllMediaTypes.size()];
    req.requestor_name = names[rng() % names.size()];

    const ServicePolicy* expected = nullptr;
    for (const auto& p : policies) {
      bool ok = (!p.match.media_type || *p.match.media_type == req.media_type) &&
                (!p.match.requestor_name || star_match(*p.match.requestor_name, req.requestor_name)) &&
                (!p.match.access_network_type || *p.match.access_network_type == "xDSL") &&
                (!p.match.subscriber_pattern || star_match(*p.match.subscriber_pattern, "alice"));
      if (ok && (!expected || p.precedence > expected->precedence)) expected = &p;
    }
    auto chosen = repo.choose(req, record);
    CHECK(chosen.policy_id == (expected ? expected->policy_id : "default"));
  }
}

TEST_CASE("duplicate precedence is a configuration error") {
  ServicePolicy a, b;
  a.policy_id = "a";
  b.policy_id = "b";
  a.precedence = b.precedence = 3;
  CHECK_THROWS_AS(PolicyRepository({a, b}), std::invalid_argument);
}

TEST_CASE("commit installs marked, open-gated, policed policies on every path hop") {
  Fixture f;
  auto resp = f.racs.handle(f.voice("s1", 100));
  REQUIRE(resp.granted());
  const auto& g = std::get<ResourceGrant>(resp.outcome);
  CHECK(g.committed);
  FlowKey upk{f.ip, "192.0.2.10", "s1"};
  FlowKey downk{"192.0.2.10", f.ip, "s1"};
  for (const auto& l : {up("dsl"), up("core")}) {
    const auto* p = f.enforcement.at(l).find(upk);
    REQUIRE(p);
    CHECK(p->dscp == 46);
    CHECK(p->gate.state == GateState::open);
    CHECK(p->gate.allowed_destinations == std::vector<std::string>{"192.0.2.10"});
    CHECK(p->policer.rate_kbps == 100);
    CHECK(p->policer.burst_bits == 2000);
    CHECK(f.enforcement.at(l).find(downk) == nullptr);
  }
  for (const auto& l : {down("core"), down("dsl")}) CHECK(f.enforcement.at(l).find(downk));
  CHECK_THROWS_AS(f.racs.commit(g.grant_id), RacsError);
  try {
    f.racs.commit(g.grant_id);
  } catch (const RacsError& e) {
    CHECK(e.code() == RacsErrc::invalid_state);
  }
}

TEST_CASE("release removes reservations and policies; a second release is unknown_grant") {
  Fixture f;
  auto resp = f.racs.handle(f.voice("s1", 100));
  REQUIRE(resp.granted());
  auto id = std::get<ResourceGrant>(resp.outcome).grant_id;
  auto rel = f.voice("s1", 0);
  rel.kind = RequestKind::release;
  auto first = f.racs.handle(rel);
  CHECK(std::get<Released>(first.outcome).grant_id == id);
  CHECK(f.racs.link(up("core")).reserved(TransportServiceClass::EF) == 0);
  CHECK(f.enforcement.at(up("core")).installed_count() == 0);
  CHECK(reason(f.racs.handle(rel)) == DenialReason::unknown_grant);
  CHECK_THROWS_AS(f.racs.release(id), RacsError);
}

TEST_CASE("reservation is atomic across the path") {
  Fixture f;
  // thin access: EF limit 150; core has room for 300
  auto r = f.voice("s1", 200, f.thin_ip);
  CHECK(reason(f.racs.handle(r)) == DenialReason::insufficient_resources);
  for (const auto& [ref, m] : f.racs.links()) CHECK(m.total_reserved() == 0);
  CHECK(f.enforcement.at(up("core")).installed_count() == 0);
}

TEST_CASE("best effort always admits without reserving") {
  Fixture f;
  for (int i = 0; i < 20; ++i) {
    auto r = f.voice("d" + std::to_string(i), 500);
    r.media_type = MediaType::data;
    r.qos.priority = 0;
    r.floor = {};
    auto resp = f.racs.handle(r);
    REQUIRE(resp.granted());
    CHECK(std::get<ResourceGrant>(resp.outcome).service_class == TransportServiceClass::BE);
  }
  for (const auto& [ref, m] : f.racs.links()) CHECK(m.total_reserved() == 0);
}

TEST_CASE("unreserved admission admits past the class share") {
  auto cfg = base_config();
  ServicePolicy p;
  p.policy_id = "open";
  p.limits = {500, 1000, 0, 0, 0.0, 15};
  p.admission = AdmissionMode::unreserved;
  cfg.policies = {p};
  Fixture f(cfg);
  CHECK(f.racs.handle(f.voice("s1", 400)).granted());
  CHECK(f.racs.handle(f.voice("s2", 400)).granted());
  CHECK(f.racs.link(up("core")).total_reserved() == 0);
  CHECK(f.enforcement.at(up("core")).installed_count() == 2);
}

TEST_CASE("modify swaps reservations atomically and keeps the class") {
  Fixture f;
  REQUIRE(f.racs.handle(f.voice("s1", 100)).granted());
  REQUIRE(f.racs.handle(f.voice("s2", 100)).granted());
  auto m = f.voice("s1", 250);
  m.kind = RequestKind::modify;
  CHECK(reason(f.racs.handle(m)) == DenialReason::insufficient_resources);
  CHECK(f.racs.grant_for_session("s1")->qos.ul_bandwidth == 100);
  CHECK(f.racs.link(up("core")).reserved(TransportServiceClass::EF) == 200);

  m.qos.ul_bandwidth = m.qos.dl_bandwidth = 200;
  auto ok = f.racs.handle(m);
  REQUIRE(ok.granted());
  CHECK(f.racs.link(up("core")).reserved(TransportServiceClass::EF) == 300);
  CHECK(f.enforcement.at(up("core")).find({f.ip, "192.0.2.10", "s1"})->policer.rate_kbps == 200);

  auto data = f.voice("s1", 50);
  data.kind = RequestKind::modify;
  data.media_type = MediaType::data;
  data.qos.priority = 0;
  auto kept = f.racs.handle(data);
  REQUIRE(kept.granted());
  CHECK(std::get<ResourceGrant>(kept.outcome).service_class == TransportServiceClass::EF);

  auto ghost = f.voice("nope", 10);
  ghost.kind = RequestKind::modify;
  CHECK(reason(f.racs.handle(ghost)) == DenialReason::unknown_grant);
}

TEST_CASE("random request streams keep reservations equal to the sum of live grants") {
  Fixture f;
  std::mt19937_64 rng(42);
  std::vector<std::string> sessions;
  for (int step = 0; step < 4000; ++step) {
    int op = static_cast<int>(rng() % 3);
    const std::string& who = rng() % 2 ? f.ip : f.thin_ip;
    if (op == 0 || sessions.empty()) {
      std::string s = "s" + std::to_string(step);
      auto r = f.voice(s, 1 + static_cast<std::int64_t>(rng() % 160), who);
      if (rng() % 4 == 0) r.media_type = MediaType::video;
      if (f.racs.handle(r).granted()) sessions.push_back(s);
    } else {
      auto idx = rng() % sessions.size();
      const auto* g = f.racs.grant_for_session(sessions[idx]);
      REQUIRE(g);
      auto r = f.voice(sessions[idx], 1 + static_cast<std::int64_t>(rng() % 160), g->subscriber_ip);
      r.kind = op == 1 ? RequestKind::modify : RequestKind::release;
      auto resp = f.racs.handle(r);
      if (op == 2) {
        CHECK(std::holds_alternative<Released>(resp.outcome));
        sessions.erase(sessions.begin() + static_cast<long>(idx));
      }
    }
    std::map<std::pair<LinkRef, TransportServiceClass>, std::int64_t> expected;
    for (const auto& g : f.racs.grants())
      for (const auto& res : g.reservations) expected[{res.link, g.service_class}] += res.amount;
    for (const auto& [ref, m] : f.racs.links())
      for (auto c : kAllClasses) {
        auto it = expected.find({ref, c});
        REQUIRE(m.reserved(c) == (it == expected.end() ? 0 : it->second));
      }
    REQUIRE(f.racs.capacity_invariants_hold());
  }
}

TEST_CASE("authorization tokens") {
  Fixture f;
  auto r = f.voice("s1", 200);
  r.kind = RequestKind::authorize_only;
  auto issued = f.racs.handle(r);
  REQUIRE(std::holds_alternative<AuthorizationToken>(issued.outcome));
  auto token = std::get<AuthorizationToken>(issued.outcome);
  CHECK(token.expires_at == 30 * kMicrosPerSecond);
  CHECK(f.racs.grants().empty());

  QoSParameters too_much = token.authorized_qos;
  too_much.ul_bandwidth = 250;
  CHECK(reason(f.racs.redeem_token(token.token_id, too_much)) == DenialReason::exceeds_authorization);

  QoSParameters less = token.authorized_qos;
  less.ul_bandwidth = less.dl_bandwidth = 150;
  auto redeemed = f.racs.redeem_token(token.token_id, less);
  REQUIRE(redeemed.granted());
  CHECK(std::get<ResourceGrant>(redeemed.outcome).qos.ul_bandwidth == 150);
  CHECK(reason(f.racs.redeem_token(token.token_id, less)) == DenialReason::token_invalid);

  auto rel = f.voice("s1", 0);
  rel.kind = RequestKind::release;
  f.racs.handle(rel);
  CHECK(reason(f.racs.redeem_token(token.token_id, less)) == DenialReason::token_invalid);
  CHECK(reason(f.racs.redeem_token("T999999", less)) == DenialReason::token_invalid);
}

TEST_CASE("token expiry boundary") {
  Fixture f;
  auto r = f.voice("s1", 100);
  r.kind = RequestKind::authorize_only;
  auto t = std::get<AuthorizationToken>(f.racs.handle(r).outcome);
  f.clock.run_until(t.expires_at - 1);
  auto r2 = f.voice("s2", 100);
  r2.kind = RequestKind::authorize_only;
  auto t2 = std::get<AuthorizationToken>(f.racs.handle(r2).outcome);
  CHECK(f.racs.redeem_token(t.token_id, t.authorized_qos).granted());
  f.clock.run_until(t2.expires_at + 1);
  CHECK(reason(f.racs.redeem_token(t2.token_id, t2.authorized_qos)) == DenialReason::token_expired);
}

TEST_CASE("a failed redemption leaves the token usable") {
  Fixture f;
  REQUIRE(f.racs.handle(f.voice("s0", 300)).granted());
  auto r = f.voice("s1", 100);
  r.kind = RequestKind::authorize_only;
  auto t = std::get<AuthorizationToken>(f.racs.handle(r).outcome);
  CHECK(reason(f.racs.redeem_token(t.token_id, t.authorized_qos)) == DenialReason::insufficient_resources);
  auto rel = f.voice("s0", 0);
  rel.kind = RequestKind::release;
  f.racs.handle(rel);
  CHECK(f.racs.redeem_token(t.token_id, t.authorized_qos).granted());
}

TEST_CASE("detached subscribers are refused and their grants can be swept") {
  Fixture f;
  REQUIRE(f.racs.handle(f.voice("s1", 100)).granted());
  REQUIRE(f.racs.handle(f.voice("s2", 50, f.thin_ip)).granted());
  auto swept = f.racs.release_for_address(f.ip, "detach");
  CHECK(swept == std::vector<std::string>{"s1"});
  CHECK(f.racs.grants().size() == 1);
  f.nass.detach("alice");
  CHECK(reason(f.racs.handle(f.voice("s3", 10, f.ip))) == DenialReason::not_attached);
}

TEST_CASE("better best effort marking follows the configured priority threshold") {
  auto cfg = base_config();
  cfg.better_best_effort_min_priority = 4;
  Fixture f(cfg);
  auto r = f.voice("d1", 100);
  r.media_type = MediaType::data;
  r.qos.priority = 5;
  auto g = std::get<ResourceGrant>(f.racs.handle(r).outcome);
  for (const auto& p : f.racs.derive_policies(g)) CHECK(p.low_drop_precedence);
  r.session_id = "d2";
  r.qos.priority = 3;
  auto g2 = std::get<ResourceGrant>(f.racs.handle(r).outcome);
  for (const auto& p : f.racs.derive_policies(g2)) CHECK_FALSE(p.low_drop_precedence);
}

TEST_CASE("unidirectional grants touch only their direction") {
  Fixture f;
  auto r = f.voice("s1", 100);
  r.media_type = MediaType::video;
  r.traffic_pattern = {Direction::unidirectional, Symmetry::asymmetric, Cast::unicast, Stream::downstream};
  auto g = std::get<ResourceGrant>(f.racs.handle(r).outcome);
  CHECK(g.links == std::vector<LinkRef>{down("core"), down("dsl")});
  CHECK(f.racs.link(up("core")).total_reserved() == 0);
  CHECK(f.racs.link(down("core")).reserved(TransportServiceClass::AF1) == 100);
}

TEST_CASE("denial reasons round-trip through their names") {
  for (auto r : {DenialReason::policy_violation, DenialReason::exceeds_subscription,
                 DenialReason::exceeds_priority, DenialReason::insufficient_resources,
                 DenialReason::token_invalid, DenialReason::token_expired,
                 DenialReason::exceeds_authorization, DenialReason::unknown_grant,
                 DenialReason::not_attached, DenialReason::invalid_request})
    CHECK(parse_denial_reason(to_string(r)) == r);
}
