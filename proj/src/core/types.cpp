// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/core/types.hpp"

#include <cmath>

#include "dhub/core/error.hpp"

namespace dhub {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table,
                        std::string_view s) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "?";
}

constexpr std::array<std::pair<StreamKind, std::string_view>, 3> kKinds{{
    {StreamKind::ImageRgb, "IMAGE_RGB"},
    {StreamKind::ImageDepth, "IMAGE_DEPTH"},
    {StreamKind::Pose, "POSE"},
}};

constexpr std::array<std::pair<PixelFormat, std::string_view>, 3> kFormats{{
    {PixelFormat::Rgb8, "RGB8"},
    {PixelFormat::Depth16, "DEPTH16"},
    {PixelFormat::None, "NONE"},
}};

constexpr std::array<std::pair<PortKind, std::string_view>, 5> kPorts{{
    {PortKind::HdmiIn, "HDMI_IN"},
    {PortKind::Ethernet, "ETHERNET"},
    {PortKind::UsbC, "USB_C"},
    {PortKind::UsbA, "USB_A"},
    {PortKind::Virtual, "VIRTUAL"},
}};

constexpr std::array<std::pair<HubState, std::string_view>, 3> kHubStates{{
    {HubState::Idle, "IDLE"},
    {HubState::Ready, "READY"},
    {HubState::Streaming, "STREAMING"},
}};

}  // namespace

std::string_view to_string(StreamKind v) { return name_of(kKinds, v); }
std::string_view to_string(PixelFormat v) { return name_of(kFormats, v); }
std::string_view to_string(PortKind v) { return name_of(kPorts, v); }
std::string_view to_string(HubState v) { return name_of(kHubStates, v); }

std::optional<StreamKind> parse_stream_kind(std::string_view s) { return lookup(kKinds, s); }
std::optional<PixelFormat> parse_pixel_format(std::string_view s) { return lookup(kFormats, s); }
std::optional<PortKind> parse_port_kind(std::string_view s) { return lookup(kPorts, s); }
std::optional<HubState> parse_hub_state(std::string_view s) { return lookup(kHubStates, s); }

std::vector<std::string> descriptor_problems(const StreamDescriptor& desc) {
  std::vector<std::string> out;
  switch (desc.kind) {
    case StreamKind::ImageRgb:
      if (desc.pixel_format != PixelFormat::Rgb8) out.emplace_back("BAD_PIXEL_FORMAT");
      if (desc.width == 0 || desc.height == 0) out.emplace_back("BAD_DIMENSIONS");
      break;
    case StreamKind::ImageDepth:
      if (desc.pixel_format != PixelFormat::Depth16) out.emplace_back("BAD_PIXEL_FORMAT");
      if (desc.width == 0 || desc.height == 0) out.emplace_back("BAD_DIMENSIONS");
      break;
    case StreamKind::Pose:
      if (desc.pixel_format != PixelFormat::None) out.emplace_back("BAD_PIXEL_FORMAT");
      if (desc.width != 0 || desc.height != 0) out.emplace_back("BAD_DIMENSIONS");
      break;
  }
  if (!(desc.nominal_fps > 0.0) || !std::isfinite(desc.nominal_fps)) {
    out.emplace_back("BAD_FPS");
  }
  return out;
}

std::size_t payload_size(const StreamDescriptor& desc) {
  auto pixels = static_cast<std::size_t>(desc.width) * desc.height;
  switch (desc.pixel_format) {
    case PixelFormat::Rgb8: return pixels * 3;
    case PixelFormat::Depth16: return pixels * 2;
    case PixelFormat::None: return kPosePayloadSize;
  }
  return 0;
}

Bytes serialize_pose(const Pose& pose) {
  Bytes out;
  out.reserve(kPosePayloadSize);
  ByteWriter w(out);
  for (double v : pose.position) w.f64(v);
  for (double v : pose.orientation) w.f64(v);
  return out;
}

Pose parse_pose(ByteView payload) {
  if (payload.size() != kPosePayloadSize) {
    throw Error(Errc::BadPayload,
                "pose payload must be 56 bytes, got " + std::to_string(payload.size()));
  }
  ByteReader r(payload);
  Pose pose;
  for (double& v : pose.position) v = r.f64();
  for (double& v : pose.orientation) v = r.f64();
  return pose;
}

double quaternion_norm(const Pose& pose) {
  double sum = 0.0;
  for (double v : pose.orientation) sum += v * v;
  return std::sqrt(sum);
}

}  // namespace dhub
