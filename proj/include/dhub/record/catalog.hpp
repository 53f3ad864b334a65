// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dhub::record {

namespace fs = std::filesystem;

struct RecordingSummary {
  /// Path relative to the storage root, '/'-separated.
  std::string name;
  /// "complete", "partial" or "corrupt".
  std::string state;
  std::string session_name;
  std::uint64_t created_ts_ns = 0;
  std::size_t streams = 0;
  std::uint64_t total_frames = 0;
  std::uint64_t total_bytes = 0;
  bool degraded = false;
  bool repaired = false;
};

/// True when `dir` holds a manifest or a `.partial` marker.
bool is_recording_dir(const fs::path& dir);

RecordingSummary summarize_recording(const fs::path& dir, const std::string& name);

/// Recordings directly under `root` or one level below it, sorted by name.
std::vector<RecordingSummary> list_recordings(const fs::path& root);

/// Resolves a recording by name under `root`, or as a path in its own right.
/// Rejects names that climb out of the root.
std::optional<fs::path> find_recording(const fs::path& root, const std::string& name);

nlohmann::json to_json(const RecordingSummary& s);

}  // namespace dhub::record
