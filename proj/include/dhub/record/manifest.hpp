// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhub/clocksync/clocksync.hpp"
#include "dhub/core/config.hpp"

namespace dhub::record {

inline constexpr std::uint32_t kFormatVersion = 1;

struct ChunkInfo {
  std::string file;  // relative to the recording directory
  std::uint32_t chunk_index = 0;
  std::uint64_t records = 0;
  std::uint64_t bytes = 0;  // file size including the chunk header
  std::uint32_t crc32c = 0;  // over the whole file

  bool operator==(const ChunkInfo&) const = default;
};

struct StreamManifest {
  StreamConfig config;
  bool lossy = false;
  std::uint64_t frame_count = 0;
  /// Sum of encoded payload lengths.
  std::uint64_t byte_count = 0;
  std::optional<std::uint64_t> first_session_ts_ns;
  std::optional<std::uint64_t> last_session_ts_ns;
  std::optional<std::uint64_t> first_seq;
  std::optional<std::uint64_t> last_seq;
  /// Sequence numbers missing from the recording (gaps, including any
  /// before the first recorded frame).
  std::uint64_t drop_count = 0;
  /// Drop counter last reported by the hub.
  std::uint64_t hub_dropped = 0;
  std::vector<ChunkInfo> chunks;

  std::uint32_t stream_id() const { return config.descriptor.stream_id; }
  /// Updates counts, bounds and drop_count for one more record.
  void account(std::uint64_t seq, std::uint64_t session_ts_ns, std::uint64_t payload_len);
  /// (frame_count - 1) / (last - first), 0 with fewer than two frames.
  double mean_fps() const;
  double duration_s() const;

  bool operator==(const StreamManifest&) const = default;
};

struct RecordingManifest {
  std::uint32_t format_version = kFormatVersion;
  std::string session_name;
  /// Wall-clock creation time, nanoseconds since the Unix epoch.
  std::uint64_t created_ts_ns = 0;
  std::uint64_t finalized_ts_ns = 0;
  bool degraded = false;
  /// Set when the manifest was rebuilt by repair.
  bool repaired = false;
  std::map<std::string, clocksync::OffsetEstimate> clock;
  std::vector<ExternalCodecConfig> codecs;
  std::vector<StreamManifest> streams;

  const StreamManifest* find(std::uint32_t stream_id) const;
  std::uint64_t total_frames() const;
  std::uint64_t total_bytes() const;

  bool operator==(const RecordingManifest&) const = default;
};

nlohmann::json to_json(const RecordingManifest& m);
/// Throws Error(BadJson) on missing or mistyped fields.
RecordingManifest manifest_from_json(const nlohmann::json& j);

/// Contents of the `.partial` marker: everything needed to rebuild a
/// manifest from the chunk files alone.
struct PartialInfo {
  std::string session_name;
  std::uint64_t created_ts_ns = 0;
  std::vector<StreamConfig> streams;
  std::vector<ExternalCodecConfig> codecs;
  std::map<std::string, clocksync::OffsetEstimate> clock;
  bool degraded = false;
};

nlohmann::json to_json(const PartialInfo& p);
PartialInfo partial_from_json(const nlohmann::json& j);

}  // namespace dhub::record
