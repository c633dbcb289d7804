#include "ngnqos/token_bucket.hpp"

#include <algorithm>
#include <stdexcept>

namespace ngnqos::transport {

TokenBucket::TokenBucket(std::int64_t rate_kbps, std::int64_t burst_bits, SimTime now)
    : rate_kbps_(rate_kbps),
      burst_millibits_(burst_bits * 1000),
      tokens_millibits_(burst_bits * 1000),
      last_update_(now) {
  if (rate_kbps < 0 || burst_bits < 0) throw std::invalid_argument("token bucket parameters must be non-negative");
}

void TokenBucket::refill(SimTime now) {
  if (now <= last_update_) return;
  // 1 kbit/s for 1 us is exactly 1 millibit.
  const std::int64_t elapsed = now - last_update_;
  const std::int64_t room = burst_millibits_ - tokens_millibits_;
  if (rate_kbps_ > 0 && elapsed >= (room + rate_kbps_ - 1) / rate_kbps_)
    tokens_millibits_ = burst_millibits_;
  else
    tokens_millibits_ += rate_kbps_ * elapsed;
  last_update_ = now;
}

bool TokenBucket::police(std::int64_t size_bytes, SimTime now) {
  refill(now);
  const std::int64_t need = size_bytes * 8 * 1000;
  if (tokens_millibits_ < need) return false;
  tokens_millibits_ -= need;
  return true;
}

void TokenBucket::reconfigure(std::int64_t rate_kbps, std::int64_t burst_bits, SimTime now) {
  refill(now);
  rate_kbps_ = rate_kbps;
  burst_millibits_ = burst_bits * 1000;
  tokens_millibits_ = std::min(tokens_millibits_, burst_millibits_);
}

}  // namespace ngnqos::transport
