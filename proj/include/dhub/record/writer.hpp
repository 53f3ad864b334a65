// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "dhub/core/error.hpp"
#include "dhub/core/types.hpp"
#include "dhub/record/format.hpp"
#include "dhub/record/manifest.hpp"

namespace dhub::record {

struct WriterOptions {
  std::uint64_t chunk_max_bytes = kDefaultChunkBytes;
  std::uint64_t chunk_max_span_ns = kDefaultChunkSpanNs;
  std::chrono::milliseconds flush_interval{1000};
  /// Records are staged in a buffer of this size and written when it fills,
  /// on rotation, on the periodic flush and at finalize.
  std::size_t buffer_bytes = 1 << 20;
  /// Run one writer thread per stream. When false, append() writes inline.
  bool threaded = true;
  /// Frames a stream may have pending before append() blocks.
  std::size_t queue_frames = 32;
  /// Called once per stream, from the writer thread, on the first I/O error.
  std::function<void(std::uint32_t stream_id, const Error& error)> on_error;
};

struct StreamWriteStats {
  std::uint64_t frames = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t file_bytes = 0;
};

/// Writes one session directory. Streams are independent: appends to
/// different streams may come from different threads.
class RecordingWriter {
 public:
  /// Creates the directory tree and the `.partial` marker. Throws
  /// Error(InvalidArgument) if a finalized recording already lives there and
  /// Error(WriteFailed) on I/O errors.
  RecordingWriter(fs::path directory, PartialInfo info, WriterOptions options = {});
  /// Stops the writer threads and flushes staged data, leaving `.partial` in
  /// place when finalize() was not called.
  ~RecordingWriter();

  RecordingWriter(const RecordingWriter&) = delete;
  RecordingWriter& operator=(const RecordingWriter&) = delete;

  /// Queues one frame. `payload_crc`, when given, is the CRC-32C of the
  /// payload and saves a pass over it. Throws Error(UnknownStream),
  /// Error(SeqOrder) when seq does not increase, and Error(WriteFailed) once
  /// the stream has hit an I/O error.
  void append(Frame frame, std::optional<std::uint32_t> payload_crc = std::nullopt);

  void set_clock(const std::string& hub_id, const clocksync::OffsetEstimate& estimate);
  void set_hub_dropped(std::uint32_t stream_id, std::uint64_t dropped);
  void set_degraded(bool degraded);

  bool failed() const;
  StreamWriteStats stats(std::uint32_t stream_id) const;
  StreamWriteStats totals() const;

  /// Drains every stream, writes the indexes and the manifest and removes the
  /// marker. Throws Error(WriteFailed) if any stream failed or the metadata
  /// cannot be written; the marker then stays.
  RecordingManifest finalize();

  const fs::path& directory() const { return dir_; }

 private:
  struct Stream;

  void write_partial();
  void shutdown_streams();

  fs::path dir_;
  PartialInfo info_;
  WriterOptions options_;
  std::map<std::uint32_t, std::unique_ptr<Stream>> streams_;
  mutable std::mutex meta_mu_;
  std::map<std::uint32_t, std::uint64_t> hub_dropped_;
  bool finalized_ = false;
};

/// Picks a directory name under `root` for a new session: `root/name`, or
/// `root/name-2`, `root/name-3`, ... when taken.
fs::path unique_recording_dir(const fs::path& root, const std::string& session_name);

std::uint64_t wall_clock_ns();

}  // namespace dhub::record
