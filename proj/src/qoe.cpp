#include "ngnqos/qoe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ngnqos::qoe {

double r_factor(double delay_ms, double jitter_ms, double loss) {
  if (!(delay_ms >= 0.0) || !(jitter_ms >= 0.0) || !(loss >= 0.0) || loss > 1.0)
    throw std::domain_error("mos inputs must be non-negative with loss <= 1");
  const double d = delay_ms + 2.0 * jitter_ms + 10.0;
  const double id = 0.024 * d + (d > 177.3 ? 0.11 * (d - 177.3) : 0.0);
  const double ie = 30.0 * std::log(1.0 + 15.0 * loss);
  return 93.2 - id - ie;
}

double mos_from_r(double r) {
  if (r < 0.0) return 1.0;
  if (r > 100.0) return 4.5;
  const double m = 1.0 + 0.035 * r + 7e-6 * r * (r - 60.0) * (100.0 - r);
  return std::clamp(m, 1.0, 5.0);
}

double mos(double delay_ms, double jitter_ms, double loss) {
  return mos_from_r(r_factor(delay_ms, jitter_ms, loss));
}

namespace {

double bin_mos(const transport::SecondBin& b) {
  return mos(b.mean_delay_ms(), b.jitter_ms(), b.loss());
}

}  // namespace

QoEReport aggregate(const transport::FlowMeasurements& m, const Thresholds& t) {
  if (m.seconds.empty()) throw std::invalid_argument("flow " + m.flow_key.str() + " has an empty series");
  QoEReport r;
  r.flow_key = m.flow_key;
  r.mos = mos(m.mean_delay_ms(), m.jitter_ms(), m.loss());

  int run = 0;
  auto close_run = [&] {
    if (run >= t.unavailable_run) r.unavailable_seconds += run;
    run = 0;
  };
  for (const auto& b : m.seconds) {
    if (b.generated == 0) {
      r.per_second_mos.push_back(std::nullopt);
      close_run();
      continue;
    }
    const double sm = bin_mos(b);
    r.per_second_mos.push_back(sm);
    if (b.loss() >= t.degraded_loss || sm < t.degraded_mos) ++r.degraded_seconds;
    if (b.dropped > 0) {
      ++r.errored_seconds;
      ++run;
    } else {
      close_run();
    }
  }
  close_run();
  return r;
}

Json to_json(const QoEReport& r) {
  Json series = Json::array();
  for (const auto& s : r.per_second_mos) series.push_back(s ? Json(*s) : Json(nullptr));
  return Json{{"flow", r.flow_key.str()},
              {"mos", r.mos},
              {"errored_seconds", r.errored_seconds},
              {"degraded_seconds", r.degraded_seconds},
              {"unavailable_seconds", r.unavailable_seconds},
              {"per_second_mos", series}};
}

bool MosFeedback::triggers(const transport::SecondBin& bin) const {
  return enabled && bin.generated > 0 && bin_mos(bin) < threshold;
}

}  // namespace ngnqos::qoe
