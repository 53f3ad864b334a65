// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

namespace dhub {

/// Frames per second over the trailing window (end_ns - window_ns, end_ns]
/// of an ascending timestamp list. Throws Error(InvalidArgument) for a
/// non-positive window.
double mean_fps(std::span<const std::uint64_t> timestamps_ns, std::int64_t window_ns,
                std::uint64_t end_ns);

/// Same, with the window ending at the last timestamp.
double mean_fps(std::span<const std::uint64_t> timestamps_ns, std::int64_t window_ns);

}  // namespace dhub
