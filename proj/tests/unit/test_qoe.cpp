#include <doctest.h>

#include <cmath>
#include <random>

#include "ngnqos/qoe.hpp"

using namespace ngnqos;
using namespace ngnqos::qoe;
using transport::FlowMeasurements;
using transport::SecondBin;

namespace {

// Expanded-polynomial form of the same mapping, written independently.
double oracle_mos(double delay, double jitter, double loss) {
  double d = delay + 2 * jitter + 10;
  double r = 93.2 - 0.024 * d - 30 * std::log1p(15 * loss);
  if (d > 177.3) r -= 0.11 * (d - 177.3);
  if (r < 0) return 1.0;
  if (r > 100) return 4.5;
  // 7e-6 R (R-60)(100-R) = 7e-6 (-R^3 + 160 R^2 - 6000 R)
  double m = 1 + 0.035 * r + 7e-6 * (-r * r * r + 160 * r * r - 6000 * r);
  return std::min(5.0, std::max(1.0, m));
}

SecondBin bin(std::uint64_t generated, std::uint64_t dropped, double delay_ms = 20) {
  SecondBin b;
  b.generated = generated;
  b.dropped = dropped;
  b.delivered = generated - dropped;
  b.delay_sum_us = static_cast<std::int64_t>(delay_ms * 1000) * static_cast<std::int64_t>(b.delivered);
  return b;
}

FlowMeasurements series(const std::vector<SecondBin>& bins) {
  FlowMeasurements m;
  m.flow_key = FlowKey{"10.0.0.1", "192.0.2.1", "s"};
  m.seconds = bins;
  for (const auto& b : bins) {
    m.generated += b.generated;
    m.delivered += b.delivered;
    m.dropped += b.dropped;
    m.delay_sum_us += b.delay_sum_us;
  }
  return m;
}

}  // namespace

TEST_CASE("reference points") {
  CHECK(r_factor(0, 0, 0) == doctest::Approx(92.96).epsilon(1e-12));
  CHECK(mos(0, 0, 0) == doctest::Approx(4.404592027648).epsilon(1e-9));
  CHECK(std::abs(mos(0, 0, 0) - 4.404) <= 0.005);
  CHECK(r_factor(300, 0, 0) == doctest::Approx(71.163).epsilon(1e-9));
  CHECK(mos(300, 0, 0) == doctest::Approx(3.651060289586).epsilon(1e-9));
  CHECK(mos(150, 20, 0.02) == doctest::Approx(3.947496938413).epsilon(1e-9));
  CHECK(mos(0, 0, 0.01) == doctest::Approx(4.307637736016).epsilon(1e-9));
  CHECK(mos(40, 5, 0) == doctest::Approx(4.379696685568).epsilon(1e-9));
}

TEST_CASE("total loss sits at the bottom of the scale") {
  // the polynomial at R = 9.78 evaluates just above 1
  CHECK(r_factor(0, 0, 1.0) == doctest::Approx(9.782338).epsilon(1e-6));
  CHECK(mos(0, 0, 1.0) == doctest::Approx(1.032148284718).epsilon(1e-9));
  CHECK(mos(500, 100, 1.0) == 1.0);
  CHECK(mos_from_r(-3) == 1.0);
  CHECK(mos_from_r(120) == 4.5);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(mos(-1, 0, 0), std::domain_error);
  CHECK_THROWS_AS(mos(0, -1, 0), std::domain_error);
  CHECK_THROWS_AS(mos(0, 0, -0.1), std::domain_error);
  CHECK_THROWS_AS(mos(0, 0, 1.1), std::domain_error);
}

TEST_CASE("matches the independent evaluation and is monotone and bounded") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dd(0, 600), jj(0, 150), ll(0, 1);
  for (int i = 0; i < 20000; ++i) {
    double d = dd(rng), j = jj(rng), l = ll(rng);
    double m = mos(d, j, l);
    CHECK(m == doctest::Approx(oracle_mos(d, j, l)).epsilon(1e-12));
    CHECK(m >= 1.0);
    CHECK(m <= 5.0);
  }
  int violations = 0;
  for (int a = 0; a <= 50; ++a)
    for (int b = 0; b <= 50; ++b)
      for (int c = 0; c <= 50; ++c) {
        double d = a * 10.0, j = b * 2.0, l = c * 0.01;
        double m = mos(d, j, l);
        if (a < 50 && mos(d + 10, j, l) > m) ++violations;
        if (b < 50 && mos(d, j + 2, l) > m) ++violations;
        if (c < 50 && mos(d, j, l + 0.01) > m) ++violations;
      }
  CHECK(violations == 0);
}

TEST_CASE("zero-loss run has no bad seconds") {
  auto r = aggregate(series(std::vector<SecondBin>(30, bin(50, 0))));
  CHECK(r.errored_seconds == 0);
  CHECK(r.degraded_seconds == 0);
  CHECK(r.unavailable_seconds == 0);
  CHECK(r.mos > 4.0);
  CHECK(r.per_second_mos.size() == 30);
}

TEST_CASE("unavailability starts at ten consecutive errored seconds") {
  std::vector<SecondBin> nine(30, bin(50, 0));
  for (int i = 5; i < 14; ++i) nine[static_cast<std::size_t>(i)] = bin(50, 1);
  auto r9 = aggregate(series(nine));
  CHECK(r9.errored_seconds == 9);
  CHECK(r9.unavailable_seconds == 0);

  auto ten = nine;
  ten[14] = bin(50, 1);
  auto r10 = aggregate(series(ten));
  CHECK(r10.errored_seconds == 10);
  CHECK(r10.unavailable_seconds == 10);

  auto tail = std::vector<SecondBin>(12, bin(50, 0));
  for (int i = 2; i < 12; ++i) tail[static_cast<std::size_t>(i)] = bin(50, 2);
  CHECK(aggregate(series(tail)).unavailable_seconds == 10);
}

TEST_CASE("idle seconds carry no opinion and are not degraded") {
  std::vector<SecondBin> s = {bin(50, 0), SecondBin{}, bin(50, 0)};
  auto r = aggregate(series(s));
  CHECK_FALSE(r.per_second_mos[1].has_value());
  CHECK(r.degraded_seconds == 0);
  CHECK(to_json(r)["per_second_mos"][1].is_null());
}

TEST_CASE("empty series is an error") {
  CHECK_THROWS_AS(aggregate(FlowMeasurements{}), std::invalid_argument);
}

TEST_CASE("random series agree with a second-by-second recount") {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 300; ++round) {
    std::vector<SecondBin> bins;
    const int n = 1 + static_cast<int>(rng() % 80);
    for (int i = 0; i < n; ++i) {
      auto g = rng() % 5 == 0 ? 0 : 100;
      auto d = g == 0 ? 0 : (rng() % 3 == 0 ? rng() % 6 : 0);
      bins.push_back(bin(g, d, static_cast<double>(rng() % 400)));
    }
    auto r = aggregate(series(bins));

    // recount with explicit index loops
    int errored = 0, degraded = 0, unavailable = 0;
    std::vector<bool> err(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) {
      err[i] = bins[i].dropped > 0;
      if (err[i]) ++errored;
      if (bins[i].generated > 0) {
        double loss = static_cast<double>(bins[i].dropped) / static_cast<double>(bins[i].generated);
        double delay = bins[i].delivered ? static_cast<double>(bins[i].delay_sum_us) / bins[i].delivered / 1000 : 0;
        if (loss >= 0.01 || oracle_mos(delay, 0, loss) < 3.6) ++degraded;
      }
    }
    for (std::size_t i = 0; i < bins.size(); ++i) {
      std::size_t lo = i, hi = i;
      if (!err[i]) continue;
      while (lo > 0 && err[lo - 1]) --lo;
      while (hi + 1 < bins.size() && err[hi + 1]) ++hi;
      if (hi - lo + 1 >= 10) ++unavailable;
    }
    CHECK(r.errored_seconds == errored);
    CHECK(r.degraded_seconds == degraded);
    CHECK(r.unavailable_seconds == unavailable);
    CHECK(r.unavailable_seconds <= r.errored_seconds);
    auto again = aggregate(series(bins));
    CHECK(to_json(again) == to_json(r));
  }
}

TEST_CASE("feedback hook is inert unless enabled") {
  MosFeedback off;
  CHECK_FALSE(off.triggers(bin(10, 10)));
  MosFeedback on{true, 3.6};
  CHECK(on.triggers(bin(10, 10)));
  CHECK_FALSE(on.triggers(bin(10, 0)));
}
