// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-way time transfer between a hub and the supervisor. A hub stamps t1
// when sending TIMESYNC_REQ, the supervisor stamps t2 on receipt and t3 when
// replying, and the hub stamps t4 when the reply arrives.

#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>

#include <nlohmann/json.hpp>

namespace dhub::clocksync {

struct SyncSample {
  std::uint64_t t1 = 0;  // hub send
  std::uint64_t t2 = 0;  // supervisor receive
  std::uint64_t t3 = 0;  // supervisor send
  std::uint64_t t4 = 0;  // hub receive
};

struct OffsetEstimate {
  /// supervisor_time - hub_time
  std::int64_t offset_ns = 0;
  std::uint64_t rtt_ns = 0;
  std::uint32_t sample_count = 1;
  std::uint64_t dispersion_ns = 0;

  bool operator==(const OffsetEstimate&) const = default;
};

struct SampleResult {
  std::int64_t offset_ns;
  std::uint64_t rtt_ns;
};

/// offset = ((t2 - t1) + (t3 - t4)) / 2, rounded toward zero;
/// rtt = (t4 - t1) - (t3 - t2). Throws Error(InvalidSample) when rtt < 0 or
/// the timestamps are out of order.
SampleResult sample_offset(const SyncSample& s);

inline constexpr std::size_t kDefaultWindow = 9;

/// Median offset of the lowest-RTT third of the most recent `window`
/// samples; invalid samples are skipped. Throws Error(NoSync) when none of
/// them is valid.
OffsetEstimate estimate_offset(std::span<const SyncSample> samples,
                               std::size_t window = kDefaultWindow);

/// capture_ts + offset, saturating to [0, 2^64 - 1].
std::uint64_t to_session_time(std::uint64_t capture_ts_ns, const OffsetEstimate& est);

nlohmann::json to_json(const OffsetEstimate& est);
OffsetEstimate offset_estimate_from_json(const nlohmann::json& j);

/// Per-hub estimator state: a bounded sample history plus the latest
/// estimate, readable from any thread.
class ClockTracker {
 public:
  explicit ClockTracker(std::size_t window = kDefaultWindow) : window_(window) {}

  /// Adds a sample and refreshes the estimate; returns false (and keeps the
  /// previous estimate) when the sample is invalid.
  bool add(const SyncSample& s);

  std::optional<OffsetEstimate> current() const;

 private:
  std::size_t window_;
  mutable std::mutex mu_;
  std::deque<SyncSample> samples_;
  std::optional<OffsetEstimate> estimate_;
};

}  // namespace dhub::clocksync
