// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// Uniform device-adapter contract and the three simulated sensors.

#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "dhub/core/config.hpp"
#include "dhub/core/types.hpp"
#include "dhub/simdev/clock.hpp"

namespace dhub::simdev {

struct AdapterSpec {
  AdapterType type = AdapterType::SimPose;
  std::uint64_t seed = 0;
  double fps = 0.0;
  double jitter_ppm = 0.0;
  /// One descriptor, or (RGB, depth) for SIM_RGBD.
  std::vector<StreamDescriptor> streams;
};

/// Defaults per device: SIM_US 1920x1080 RGB8 @ 60, SIM_POSE @ 200,
/// SIM_RGBD 1280x720 RGB8 + DEPTH16 @ 30.
AdapterSpec default_spec(AdapterType type, std::uint32_t first_stream_id = 1,
                         const std::string& hub_id = "A");

/// Groups a hub's stream configs into adapter instances (SIM_RGBD pairs
/// become one adapter). Streams must already be validated.
std::vector<AdapterSpec> adapters_for_streams(const std::vector<StreamConfig>& streams);

/// Deterministic frame factory: everything an adapter emits is a function
/// of its spec and the tick index.
class FrameSource {
 public:
  explicit FrameSource(AdapterSpec spec);

  const AdapterSpec& spec() const { return spec_; }

  /// Scheduled time of tick k relative to the adapter start; the first tick
  /// is one period after start.
  std::uint64_t tick_offset_ns(std::uint64_t k) const;
  /// Timing jitter of tick k, uniform in +/- jitter_ppm of the period.
  std::int64_t jitter_ns(std::uint64_t k) const;
  /// Frames of tick k, all stamped with capture_ts_ns and seq = k.
  std::vector<Frame> frames_for_tick(std::uint64_t k, std::uint64_t capture_ts_ns) const;

 private:
  AdapterSpec spec_;
  double period_ns_;
};

/// Receives emitted frames; returning false counts the frame as dropped at
/// the adapter. Must not block.
/// The payload a simulated stream carries for `seq`, regenerated from its
/// configuration. Pose streams sample the trajectory at seq / fps.
Bytes simulated_payload(const StreamConfig& stream, std::uint64_t seq);

using FrameSink = std::function<bool(Frame&&)>;

enum class AdapterState { Stopped, Running };

class AdapterHandle {
 public:
  AdapterHandle() = default;
  AdapterHandle(AdapterHandle&&) noexcept = default;
  AdapterHandle& operator=(AdapterHandle&&) noexcept;
  ~AdapterHandle();

  /// Halts the tick loop and waits for it; returns frames emitted per stream.
  std::uint64_t stop();

  AdapterState state() const;
  std::uint64_t frames_emitted() const;
  std::uint64_t dropped() const;
  const std::vector<StreamDescriptor>& descriptors() const;

 private:
  friend AdapterHandle run_adapter(AdapterSpec, FrameSink, Clock&);

  struct Shared {
    FrameSource source;
    FrameSink sink;
    Clock* clock = nullptr;
    std::atomic<std::uint64_t> emitted{0};
    std::atomic<std::uint64_t> dropped{0};
    std::atomic<bool> running{false};
  };

  std::shared_ptr<Shared> shared_;
  std::jthread thread_;
};

/// Starts a tick loop emitting one tick every 1/fps on `clock`.
AdapterHandle run_adapter(AdapterSpec spec, FrameSink sink, Clock& clock);

}  // namespace dhub::simdev
