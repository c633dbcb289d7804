#pragma once

#include <cstdint>

#include "ngnqos/scheduler.hpp"

namespace ngnqos::transport {

/// Single-rate policer. Tokens are kept in millibits so that refill by
/// rate(kbit/s) x elapsed(us) is exact integer arithmetic.
class TokenBucket {
 public:
  /// Starts full.
  TokenBucket(std::int64_t rate_kbps, std::int64_t burst_bits, SimTime now);

  /// Refills for the elapsed time, then conforms iff the packet fits, in
  /// which case its size is removed. A violating packet leaves tokens unchanged.
  bool police(std::int64_t size_bytes, SimTime now);

  void refill(SimTime now);

  /// Changes rate and depth; the current fill is clipped to the new depth.
  void reconfigure(std::int64_t rate_kbps, std::int64_t burst_bits, SimTime now);

  std::int64_t rate_kbps() const { return rate_kbps_; }
  std::int64_t burst_bits() const { return burst_millibits_ / 1000; }
  std::int64_t tokens_millibits() const { return tokens_millibits_; }
  double tokens_bits() const { return static_cast<double>(tokens_millibits_) / 1000.0; }
  SimTime last_update() const { return last_update_; }

 private:
  std::int64_t rate_kbps_;
  std::int64_t burst_millibits_;
  std::int64_t tokens_millibits_;
  SimTime last_update_;
};

}  // namespace ngnqos::transport
