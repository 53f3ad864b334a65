// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// Domain types shared by hubs, the supervisor and offline tools.
//
// Timestamps are unsigned 64-bit nanoseconds in one of two clock domains:
// the capturing hub's monotonic clock (capture_ts_ns) or the supervisor's
// session clock (session_ts_ns). Frames carry both.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dhub/core/bytes.hpp"

namespace dhub {

enum class StreamKind : std::uint8_t { ImageRgb, ImageDepth, Pose };
enum class PixelFormat : std::uint8_t { Rgb8, Depth16, None };
enum class PortKind : std::uint8_t { HdmiIn, Ethernet, UsbC, UsbA, Virtual };

/// Lifecycle of a hub daemon, shared by hubd (owner) and supd (observer).
enum class HubState : std::uint8_t { Idle, Ready, Streaming };

std::string_view to_string(StreamKind v);
std::string_view to_string(PixelFormat v);
std::string_view to_string(PortKind v);
std::string_view to_string(HubState v);

std::optional<StreamKind> parse_stream_kind(std::string_view s);
std::optional<PixelFormat> parse_pixel_format(std::string_view s);
std::optional<PortKind> parse_port_kind(std::string_view s);
std::optional<HubState> parse_hub_state(std::string_view s);

/// Identity and format of one sensor stream.
struct StreamDescriptor {
  std::uint32_t stream_id = 0;
  std::string name;
  StreamKind kind = StreamKind::Pose;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  PixelFormat pixel_format = PixelFormat::None;
  double nominal_fps = 0.0;
  std::string source_hub;
  PortKind source_port_kind = PortKind::Virtual;

  bool operator==(const StreamDescriptor&) const = default;
};

/// Reasons a descriptor fails its invariants; empty when well formed.
std::vector<std::string> descriptor_problems(const StreamDescriptor& desc);

/// Decoded payload length for a well-formed descriptor.
std::size_t payload_size(const StreamDescriptor& desc);

struct Frame {
  std::uint32_t stream_id = 0;
  std::uint64_t seq = 0;
  std::uint64_t capture_ts_ns = 0;
  std::uint64_t session_ts_ns = 0;
  std::uint8_t codec_id = 0;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

/// Rigid pose: position in meters, orientation as a (w, x, y, z) quaternion.
struct Pose {
  std::array<double, 3> position{};
  std::array<double, 4> orientation{1.0, 0.0, 0.0, 0.0};

  bool operator==(const Pose&) const = default;
};

inline constexpr std::size_t kPosePayloadSize = 56;

/// 7 big-endian doubles: px, py, pz, qw, qx, qy, qz.
Bytes serialize_pose(const Pose& pose);
/// Throws Error(BadPayload) unless the view is exactly 56 bytes.
Pose parse_pose(ByteView payload);

double quaternion_norm(const Pose& pose);

}  // namespace dhub
