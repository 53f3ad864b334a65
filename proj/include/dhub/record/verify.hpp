// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhub/record/manifest.hpp"

namespace dhub::record {

namespace fs = std::filesystem;

/// One problem found by verify. `location` is a path relative to the
/// recording, optionally followed by " offset N".
struct Finding {
  std::string code;
  std::string location;
  std::string message;
};

struct StreamCheck {
  std::uint32_t stream_id = 0;
  std::uint64_t records = 0;
  std::uint64_t crc_failures = 0;
  std::uint64_t seq_gaps = 0;
  std::uint64_t payload_checked = 0;
  double max_pose_residual = 0.0;
};

struct VerifyReport {
  std::string recording;
  /// No manifest; the `.partial` marker describes the streams.
  bool partial = false;
  std::vector<StreamCheck> streams;
  std::vector<Finding> findings;

  bool clean() const { return findings.empty(); }
};

struct VerifyOptions {
  /// Decode payloads and compare simulated streams with their generators.
  bool check_payloads = true;
};

/// Re-reads every record of a recording. Never throws for content problems;
/// they become findings.
VerifyReport verify_recording(const fs::path& directory, const VerifyOptions& options = {});

nlohmann::json to_json(const VerifyReport& report);

struct RepairedStream {
  std::uint32_t stream_id = 0;
  std::uint64_t recovered = 0;
  std::uint64_t discarded_bytes = 0;
};

struct RepairResult {
  RecordingManifest manifest;
  std::vector<RepairedStream> streams;
};

/// Salvages a recording: keeps, per stream, the longest prefix of records
/// with intact CRCs and increasing seq, truncates the chunk where that
/// prefix ends, sets later chunks aside as `*.orphan`, rebuilds the indexes
/// and writes a manifest marked repaired. Throws Error(NotFound) without a
/// manifest or marker to describe the streams.
RepairResult repair_recording(const fs::path& directory);

}  // namespace dhub::record
