#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ngnqos/core_model.hpp"
#include "ngnqos/event_log.hpp"
#include "ngnqos/ims_core.hpp"
#include "ngnqos/link.hpp"
#include "ngnqos/nass.hpp"
#include "ngnqos/qoe.hpp"
#include "ngnqos/racs.hpp"
#include "ngnqos/transport_sim.hpp"

namespace ngnqos::scenario {

struct SubscriberSpec {
  std::string id;
  /// Transport-layer (attach) credentials.
  std::string credentials;
  nass::TransportQoSProfile qos_profile;
  bool privacy_indicator = false;
  std::string location;
  ims::ServiceLayerProfile service_profile;
  nass::TerminalProfile terminal;

  bool operator==(const SubscriberSpec&) const = default;
};

nass::TerminalProfile default_terminal();

enum class ActionOp : std::uint8_t {
  attach,
  register_user,
  initiate,
  renegotiate,
  terminate,
  detach,
  update_location,
};

std::string_view to_string(ActionOp op);
std::optional<ActionOp> parse_action_op(std::string_view s);

/// One timed step. Which fields matter depends on `op`; sessions are named
/// by the label given at `initiate`.
struct Action {
  SimTime at = 0;
  ActionOp op = ActionOp::attach;
  std::string subscriber;
  std::string access_network;                 // attach
  std::optional<std::string> credentials;     // attach, register: overrides the stored ones
  std::string label;                          // initiate, renegotiate, terminate
  std::string service;                        // initiate
  std::optional<ims::ScenarioMode> mode;      // initiate
  std::optional<QoSParameters> qos;           // initiate (default: required QoS), renegotiate
  std::optional<std::string> peer;            // initiate
  ims::Initiator initiator = ims::Initiator::user;  // renegotiate
  std::string location;                       // update_location

  bool operator==(const Action&) const = default;
};

/// Traffic bound to a session label. "up" runs subscriber to peer.
struct SourceSpec {
  std::string session;
  LinkDirection direction = LinkDirection::up;
  transport::SourceModel model = transport::SourceModel::cbr;
  std::int64_t rate_kbps = 0;
  std::int64_t packet_size = 0;
  SimTime start = 0;
  SimTime stop = 0;
  SimTime on_mean = 0;
  SimTime off_mean = 0;

  bool operator==(const SourceSpec&) const = default;
};

struct Scenario {
  std::string name;
  SimTime duration = 0;
  std::uint64_t seed = 1;
  SimTime signaling_delay = 0;
  SimTime token_redeem_delay = 0;
  SimTime token_ttl = 30 * kMicrosPerSecond;
  SimTime queue_limit = 100 * kMicrosPerMilli;
  std::optional<int> better_best_effort_min_priority;
  ClassMapping class_map;
  DscpTable dscp;
  qoe::MosFeedback mos_feedback;

  std::string core_link;
  std::vector<LinkConfig> links;
  std::vector<racs::ResourceControlConfig> resource_control;
  std::vector<nass::AccessNetwork> access_networks;
  std::vector<SubscriberSpec> subscribers;
  std::vector<ims::ApplicationServer> application_servers;
  std::vector<ims::ServiceDescriptor> services;
  std::vector<racs::ServicePolicy> policies;
  std::vector<Action> actions;
  std::vector<SourceSpec> sources;

  bool operator==(const Scenario&) const = default;
};

/// Carries every problem found, not just the first. Syntax errors are
/// reported as "line L, column C: ...", field errors as "path.to.field: ...".
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Throws ScenarioError.
Scenario parse_scenario_text(std::string_view text);
/// Throws ScenarioError, including for an unreadable file.
Scenario parse_scenario(const std::string& path);
/// Throws ScenarioError.
Scenario from_json(const Json& j);
Json to_json(const Scenario& s);

/// Cross-reference and range checks; empty when the scenario is runnable.
std::vector<std::string> validate(const Scenario& s);

}  // namespace ngnqos::scenario
