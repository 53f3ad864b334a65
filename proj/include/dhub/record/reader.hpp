// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dhub/codec/registry.hpp"
#include "dhub/core/types.hpp"
#include "dhub/record/format.hpp"
#include "dhub/record/manifest.hpp"

namespace dhub::record {

/// Read-only view of a finalized (or repaired) recording. Instances are
/// independent; several may read the same directory concurrently.
class Recording {
 public:
  /// Throws Error(NotFound) when there is no manifest, Error(BadJson) when
  /// it does not parse.
  static Recording open(const fs::path& directory);

  const fs::path& directory() const { return dir_; }
  const RecordingManifest& manifest() const { return manifest_; }
  /// Throws Error(UnknownStream).
  const StreamManifest& stream(std::uint32_t stream_id) const;

  /// The stream's index, sorted by session time. Throws Error(Corrupt) if the
  /// index file is missing or malformed.
  std::vector<IndexEntry> index(std::uint32_t stream_id) const;

  /// Reads and CRC-checks one record. With `decode`, the payload is decoded
  /// through `codecs` (its codec_id becomes 0). Throws Error(CrcMismatch)
  /// naming the chunk and offset, Error(Corrupt) and codec errors.
  Frame read(std::uint32_t stream_id, const IndexEntry& entry, const codec::CodecRegistry& codecs,
             bool decode = true) const;

  /// Frames with t0 <= session_ts_ns < t1 in session-time order.
  std::vector<Frame> read_range(std::uint32_t stream_id, std::uint64_t t0, std::uint64_t t1,
                                const codec::CodecRegistry& codecs, bool decode = true) const;

  /// A registry holding the built-in codecs plus those the session declared.
  codec::CodecRegistry codecs() const;

 private:
  struct Files;

  fs::path dir_;
  RecordingManifest manifest_;
  std::shared_ptr<Files> files_;
};

/// Sample-and-hold pairs each master frame with the latest frame at or
/// before it; nearest picks the closest frame either side (earlier on ties).
enum class AlignMode { SampleAndHold, Nearest };

/// For each master timestamp, the index into `other` chosen by `mode`, or
/// nullopt when there is none. Both inputs must be sorted ascending.
std::vector<std::optional<std::size_t>> align_indices(std::span<const std::uint64_t> master,
                                                      std::span<const std::uint64_t> other,
                                                      AlignMode mode = AlignMode::SampleAndHold);

struct AlignedTuple {
  /// Master session time.
  std::uint64_t t = 0;
  /// One slot per requested stream, in request order. The master's slot is
  /// always filled.
  std::vector<std::optional<Frame>> frames;
};

/// Iterates a recording in master-stream order, yielding one tuple per master
/// frame. Only the indexes are loaded up front; payloads are read lazily.
class AlignedCursor {
 public:
  /// Throws Error(UnknownStream) for ids absent from the recording or a
  /// master that is not among `stream_ids`.
  AlignedCursor(const Recording& recording, std::vector<std::uint32_t> stream_ids,
                std::uint32_t master_stream, AlignMode mode = AlignMode::SampleAndHold,
                bool decode = true);

  std::optional<AlignedTuple> next();
  std::size_t size() const { return master_index_.size(); }

 private:
  const Recording* recording_;
  codec::CodecRegistry codecs_;
  std::vector<std::uint32_t> ids_;
  std::size_t master_slot_;
  bool decode_;
  std::vector<IndexEntry> master_index_;
  std::vector<std::vector<IndexEntry>> indexes_;
  std::vector<std::vector<std::optional<std::size_t>>> picks_;
  std::size_t pos_ = 0;
};

AlignedCursor aligned_cursor(const Recording& recording, std::vector<std::uint32_t> stream_ids,
                             std::uint32_t master_stream, AlignMode mode = AlignMode::SampleAndHold);

}  // namespace dhub::record
