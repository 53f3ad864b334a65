// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// On-disk layout of a recording (docs/format.md):
//
//   <session>/manifest.json              written at finalize
//   <session>/.partial                   session metadata; removed at finalize
//   <session>/streams/<id>/chunk-NNNNNN.dhc
//   <session>/streams/<id>/index.dhi
//
// Chunk: "DHC1" | stream_id u32 | chunk_index u32, then records
//   seq u64 | capture_ts u64 | session_ts u64 | codec u8 | reserved u8 |
//   payload_len u32 | payload | crc u32 (CRC-32C from seq through payload)
// Index: session_ts u64 | chunk_index u32 | byte_offset u64 per record.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "dhub/core/bytes.hpp"
#include "dhub/core/types.hpp"

namespace dhub::record {

namespace fs = std::filesystem;

inline constexpr std::array<std::uint8_t, 4> kChunkMagic{'D', 'H', 'C', '1'};
inline constexpr std::size_t kChunkHeaderSize = 12;
inline constexpr std::size_t kRecordHeaderSize = 30;
inline constexpr std::size_t kRecordOverhead = kRecordHeaderSize + 4;
inline constexpr std::size_t kIndexEntrySize = 20;
inline constexpr std::uint64_t kDefaultChunkBytes = 256ull << 20;
inline constexpr std::uint64_t kDefaultChunkSpanNs = 10'000'000'000ull;

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kPartialName = ".partial";

struct RecordHeader {
  std::uint64_t seq = 0;
  std::uint64_t capture_ts_ns = 0;
  std::uint64_t session_ts_ns = 0;
  std::uint8_t codec_id = 0;
  std::uint32_t payload_len = 0;
};

struct IndexEntry {
  std::uint64_t session_ts_ns = 0;
  std::uint32_t chunk_index = 0;
  std::uint64_t byte_offset = 0;

  bool operator==(const IndexEntry&) const = default;
};

std::array<std::uint8_t, kChunkHeaderSize> encode_chunk_header(std::uint32_t stream_id,
                                                               std::uint32_t chunk_index);
std::array<std::uint8_t, kRecordHeaderSize> encode_record_header(const RecordHeader& h);
RecordHeader decode_record_header(const std::uint8_t* bytes);

std::string chunk_file_name(std::uint32_t chunk_index);
fs::path stream_dir(const fs::path& recording, std::uint32_t stream_id);
fs::path chunk_path(const fs::path& recording, std::uint32_t stream_id, std::uint32_t chunk_index);
fs::path index_path(const fs::path& recording, std::uint32_t stream_id);

Bytes encode_index(const std::vector<IndexEntry>& entries);
/// Throws Error(Corrupt) when the size is not a multiple of 20 bytes.
std::vector<IndexEntry> decode_index(ByteView bytes);

/// One record seen while scanning a chunk.
struct RecordView {
  std::uint64_t offset = 0;
  RecordHeader header;
  ByteView payload;
  /// CRC-32C over the record header and payload as computed while reading.
  std::uint32_t computed_crc = 0;
  std::uint32_t stored_crc = 0;
  bool crc_ok = true;
};

enum class ScanEnd { Complete, Truncated, BadChunkHeader, Unreadable };

struct ChunkScanResult {
  ScanEnd end = ScanEnd::Complete;
  /// Offset where scanning stopped (file size when complete).
  std::uint64_t stop_offset = 0;
  std::uint64_t records = 0;
};

/// Walks every structurally complete record of a chunk, CRC-checking each.
/// The visitor returns false to stop early.
ChunkScanResult scan_chunk(const fs::path& path, std::uint32_t stream_id, std::uint32_t chunk_index,
                           const std::function<bool(const RecordView&)>& visit);

/// Reads a whole file; throws Error(IoError).
Bytes read_file(const fs::path& path);
/// Writes through a temporary file and renames; throws Error(WriteFailed).
void write_file_atomic(const fs::path& path, ByteView data);

}  // namespace dhub::record
