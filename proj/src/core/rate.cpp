// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/core/rate.hpp"

#include <algorithm>

#include "dhub/core/error.hpp"

namespace dhub {

double mean_fps(std::span<const std::uint64_t> ts, std::int64_t window_ns, std::uint64_t end_ns) {
  if (window_ns <= 0) throw Error(Errc::InvalidArgument, "mean_fps window must be positive");
  if (ts.empty()) return 0.0;
  auto window = static_cast<std::uint64_t>(window_ns);
  auto last = std::upper_bound(ts.begin(), ts.end(), end_ns);
  auto first = ts.begin();
  if (end_ns >= window) first = std::upper_bound(ts.begin(), last, end_ns - window);
  auto count = static_cast<double>(std::distance(first, last));
  return count / (static_cast<double>(window_ns) * 1e-9);
}

double mean_fps(std::span<const std::uint64_t> ts, std::int64_t window_ns) {
  if (window_ns <= 0) throw Error(Errc::InvalidArgument, "mean_fps window must be positive");
  if (ts.empty()) return 0.0;
  return mean_fps(ts, window_ns, ts.back());
}

}  // namespace dhub
