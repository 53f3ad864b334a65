// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic content for the simulated sensors. Image payloads start with
// "SIMF" and the big-endian frame sequence number so that corruption or
// mislabeling is detectable downstream.

#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "dhub/core/bytes.hpp"
#include "dhub/core/types.hpp"

namespace dhub::simdev {

inline constexpr std::uint64_t kRgbSeedBias = std::uint64_t{1} << 63;

/// xorshift64* with the state update applied before each output.
class XorShift64Star {
 public:
  explicit XorShift64Star(std::uint64_t state) : x_(state) {}

  std::uint64_t next() {
    x_ ^= x_ >> 12;
    x_ ^= x_ << 25;
    x_ ^= x_ >> 27;
    return x_ * 0x2545F4914F6CDD1DULL;
  }

 private:
  std::uint64_t x_;
};

/// Writes "SIMF" | seq (u64 BE) | PRNG bytes (high byte of each output
/// first) into `out`, which must hold at least 12 bytes.
void fill_sim_image(std::span<std::uint8_t> out, std::uint64_t prng_state, std::uint64_t seq);

/// Ultrasound-like RGB8 frame; the PRNG is seeded with seed ^ seq.
Bytes generate_us_frame(std::uint64_t seed, std::uint64_t seq, std::uint32_t width,
                        std::uint32_t height);

struct TrajectoryParams {
  double radius_m = 0.15;
  double height_m = 0.40;
  double amplitude_m = 0.02;
  double omega_rad_s = 0.5;
};

/// Point on the tracked tool trajectory: a circle of radius R at height Z0
/// with a vertical wobble, rotating about z at the same rate.
Pose generate_pose(std::uint64_t seed, double t_seconds);

/// DEPTH16 payload: 400 + ((x + y + seq) mod 1648) millimeters per pixel,
/// big-endian, row-major.
Bytes generate_depth_frame(std::uint64_t seq, std::uint32_t width, std::uint32_t height);

/// RGB (PRNG seeded with seed ^ (seq + 2^63)) and depth of one RGB-D tick.
std::pair<Bytes, Bytes> generate_rgbd_frame(std::uint64_t seed, std::uint64_t seq,
                                            std::uint32_t width, std::uint32_t height);

}  // namespace dhub::simdev
