// Command-line front end: run, validate and replay scenarios.
//
// Exit codes: 0 success, 1 invalid input (scenario, log or arguments),
// 2 internal invariant violation.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ngnqos/harness.hpp"
#include "ngnqos/replay.hpp"
#include "ngnqos/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kViolation = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ngnqos");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^[%l]%$ %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("NGNQOS_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(level));
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  return static_cast<bool>(out);
}

int cmd_validate(const std::string& path) {
  try {
    auto s = ngnqos::scenario::parse_scenario(path);
    std::cout << path << ": ok (" << s.subscribers.size() << " subscribers, " << s.actions.size() << " actions, "
              << s.sources.size() << " sources)\n";
    return kOk;
  } catch (const ngnqos::scenario::ScenarioError& e) {
    for (const auto& err : e.errors()) std::cerr << path << ": " << err << "\n";
    return kInvalid;
  }
}

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string log_path;
  std::string report_path;
  bool trace_packets = false;
  std::string mode;
};

int cmd_run(const RunArgs& args) {
  ngnqos::scenario::Scenario s;
  try {
    s = ngnqos::scenario::parse_scenario(args.scenario);
  } catch (const ngnqos::scenario::ScenarioError& e) {
    for (const auto& err : e.errors()) std::cerr << args.scenario << ": " << err << "\n";
    return kInvalid;
  }

  ngnqos::harness::RunOptions options;
  options.seed = args.seed;
  options.trace_packets = args.trace_packets;
  if (!args.mode.empty()) {
    auto mode = ngnqos::ims::parse_scenario_mode(args.mode);
    if (!mode) {
      std::cerr << "unknown mode '" << args.mode << "'\n";
      return kInvalid;
    }
    options.mode_override = mode;
  }

  spdlog::info("running '{}' (seed {})", s.name, options.seed.value_or(s.seed));
  ngnqos::harness::RunResult result;
  try {
    result = ngnqos::harness::run_end_to_end(s, options);
  } catch (const std::logic_error& e) {
    spdlog::error("internal invariant violated: {}", e.what());
    return kViolation;
  }
  const auto report = ngnqos::harness::to_json(result.report);
  spdlog::info("{} events, digest {}", result.events.size(), report["log_digest"].get<std::string>());

  if (!args.log_path.empty()) {
    std::ofstream out(args.log_path, std::ios::binary);
    for (const auto& e : result.events) out << e.to_line() << '\n';
    if (!out) {
      spdlog::error("cannot write {}", args.log_path);
      return kInvalid;
    }
  }
  if (!args.report_path.empty()) {
    if (!write_file(args.report_path, report.dump(2) + "\n")) {
      spdlog::error("cannot write {}", args.report_path);
      return kInvalid;
    }
  } else {
    std::cout << report.dump(2) << "\n";
  }

  // The run re-checks its own log before declaring success.
  auto replayed = ngnqos::replay::check(result.events);
  auto mismatches = ngnqos::replay::check_report(replayed, result.events, report);
  for (const auto& v : replayed.violations) spdlog::error("{}", v);
  for (const auto& v : mismatches) spdlog::error("{}", v);
  if (!replayed.ok() || !mismatches.empty() || !result.report.capacity_invariants_hold ||
      result.report.work_conservation_violations != 0)
    return kViolation;
  return kOk;
}

int cmd_replay(const std::string& path, bool check, const std::string& report_path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << path << ": cannot open file\n";
    return kInvalid;
  }
  std::vector<ngnqos::Event> events;
  try {
    events = ngnqos::EventLog::read_jsonl(in);
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kInvalid;
  }
  auto result = ngnqos::replay::check(events);
  std::vector<std::string> mismatches;
  if (!report_path.empty()) {
    std::ifstream rin(report_path, std::ios::binary);
    try {
      mismatches = ngnqos::replay::check_report(result, events, ngnqos::Json::parse(rin));
    } catch (const std::exception& e) {
      std::cerr << report_path << ": " << e.what() << "\n";
      return kInvalid;
    }
  }
  auto j = ngnqos::replay::to_json(result);
  j["report_mismatches"] = mismatches;
  std::cout << j.dump(2) << "\n";
  for (const auto& v : result.violations) spdlog::error("{}", v);
  for (const auto& v : mismatches) spdlog::error("{}", v);
  if (check && (!result.ok() || !mismatches.empty())) return kViolation;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Policy-based QoS/QoE model of an IMS/NGN network"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Execute a scenario and write its report and event log");
  run_cmd->add_option("scenario", run.scenario, "Scenario JSON file")->required();
  run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
  run_cmd->add_option("--log", run.log_path, "Write the JSONL event log here");
  run_cmd->add_option("--report", run.report_path, "Write the JSON report here (default: stdout)");
  run_cmd->add_flag("--trace-packets", run.trace_packets, "Log every enforcement decision");
  run_cmd->add_option("--mode", run.mode, "Override every session's mode")
      ->check(CLI::IsMember({"network_driven", "token", "device_driven"}));

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file and list every problem");
  validate_cmd->add_option("scenario", validate_path, "Scenario JSON file")->required();

  std::string replay_path, replay_report;
  bool replay_check = false;
  auto* replay_cmd = app.add_subcommand("replay", "Re-derive reservations and gate state from an event log");
  replay_cmd->add_option("log", replay_path, "JSONL event log")->required();
  replay_cmd->add_flag("--check", replay_check, "Exit 2 on any invariant violation");
  replay_cmd->add_option("--report", replay_report, "Also compare against this run report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  if (*run_cmd) return cmd_run(run);
  if (*validate_cmd) return cmd_validate(validate_path);
  return cmd_replay(replay_path, replay_check, replay_report);
}
