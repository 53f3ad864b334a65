// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// Declarative session description and its validation. The JSON form produced
// by to_json() is the canonical file format read by the CLI and the API; see
// docs/config.md for the schema.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhub/core/types.hpp"

namespace dhub {

enum class AdapterType : std::uint8_t { SimUs, SimPose, SimRgbd };

std::string_view to_string(AdapterType v);
std::optional<AdapterType> parse_adapter_type(std::string_view s);

struct AdapterConfig {
  AdapterType type = AdapterType::SimPose;
  std::uint64_t seed = 0;
  /// Emission rate; falls back to the descriptor's nominal_fps when unset.
  std::optional<double> fps;
  std::uint8_t codec_id = 0;
  double jitter_ppm = 0.0;
  /// Streams on one hub sharing a SIM_RGBD instance name form one device.
  std::string instance;

  bool operator==(const AdapterConfig&) const = default;
};

struct StreamConfig {
  StreamDescriptor descriptor;
  AdapterConfig adapter;

  double effective_fps() const { return adapter.fps.value_or(descriptor.nominal_fps); }

  bool operator==(const StreamConfig&) const = default;
};

struct HubEndpoint {
  std::string hub_id;
  std::string address;

  bool operator==(const HubEndpoint&) const = default;
};

/// An out-of-process codec (ids 128-255) piped through stdin/stdout.
struct ExternalCodecConfig {
  std::uint8_t codec_id = 128;
  std::string encoder;
  std::string decoder;
  bool lossy = false;

  bool operator==(const ExternalCodecConfig&) const = default;
};

struct SessionConfig {
  std::string session_name;
  std::vector<HubEndpoint> hubs;
  std::vector<StreamConfig> streams;
  std::string storage_dir;
  std::uint32_t queue_capacity = 256;
  std::uint32_t metrics_interval_ms = 500;
  std::vector<ExternalCodecConfig> codecs;

  const StreamConfig* find_stream(std::uint32_t stream_id) const;
  std::vector<StreamConfig> streams_for_hub(const std::string& hub_id) const;

  bool operator==(const SessionConfig&) const = default;
};

struct Violation {
  std::string code;
  std::string path;
  std::string message;
};

/// Every violated invariant; an empty result means the config is usable.
std::vector<Violation> validate_session_config(const SessionConfig& cfg);

nlohmann::json to_json(const StreamDescriptor& desc);
nlohmann::json to_json(const StreamConfig& stream);
nlohmann::json to_json(const SessionConfig& cfg);
nlohmann::json to_json(const Violation& v);
nlohmann::json to_json(const std::vector<Violation>& vs);

struct ParsedConfig {
  std::optional<SessionConfig> config;
  std::vector<Violation> violations;
};

/// Structural parse (field presence and types). Semantic checks are left to
/// validate_session_config.
ParsedConfig parse_session_config(const nlohmann::json& j);
std::optional<StreamDescriptor> parse_stream_descriptor(const nlohmann::json& j,
                                                         std::vector<Violation>& out,
                                                         const std::string& path);
std::optional<StreamConfig> parse_stream_config(const nlohmann::json& j,
                                                std::vector<Violation>& out,
                                                const std::string& path);

/// The three-sensor setup of the reference experiment: ultrasound 1080p,
/// pose tracker and RGB-D 720p, all attached to one hub.
SessionConfig reference_session(const std::string& hub_id = "A",
                                const std::string& storage_dir = "recordings");

}  // namespace dhub
