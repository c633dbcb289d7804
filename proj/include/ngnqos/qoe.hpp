#pragma once

#include <optional>
#include <vector>

#include "ngnqos/event_log.hpp"
#include "ngnqos/transport_sim.hpp"

namespace ngnqos::qoe {

/// R = 93.2 - Id(d) - Ie(loss) with d = delay + 2 x jitter + 10 ms of
/// de-jitter buffer. Throws std::domain_error outside the input domain.
double r_factor(double delay_ms, double jitter_ms, double loss);

/// R mapped onto the 1-5 opinion scale.
double mos_from_r(double r);

double mos(double delay_ms, double jitter_ms, double loss);

struct Thresholds {
  double degraded_loss = 0.01;
  double degraded_mos = 3.6;
  int unavailable_run = 10;  // consecutive errored seconds
};

struct QoEReport {
  FlowKey flow_key;
  double mos = 1.0;
  int errored_seconds = 0;
  int degraded_seconds = 0;
  int unavailable_seconds = 0;
  /// Unset for seconds in which the flow generated nothing.
  std::vector<std::optional<double>> per_second_mos;
};

/// Throws std::invalid_argument on an empty series.
QoEReport aggregate(const transport::FlowMeasurements& m, const Thresholds& t = {});

Json to_json(const QoEReport& r);

/// Renegotiation trigger on poor experience. Off unless enabled.
struct MosFeedback {
  bool enabled = false;
  double threshold = 3.6;

  bool operator==(const MosFeedback&) const = default;
  bool triggers(const transport::SecondBin& bin) const;
};

}  // namespace ngnqos::qoe
