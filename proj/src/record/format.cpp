// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/record/format.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "dhub/core/error.hpp"
#include "dhub/wire/crc32c.hpp"

namespace dhub::record {

std::array<std::uint8_t, kChunkHeaderSize> encode_chunk_header(std::uint32_t stream_id,
                                                               std::uint32_t chunk_index) {
  std::array<std::uint8_t, kChunkHeaderSize> h{};
  std::memcpy(h.data(), kChunkMagic.data(), 4);
  store_be32(h.data() + 4, stream_id);
  store_be32(h.data() + 8, chunk_index);
  return h;
}

std::array<std::uint8_t, kRecordHeaderSize> encode_record_header(const RecordHeader& r) {
  std::array<std::uint8_t, kRecordHeaderSize> h{};
  store_be64(h.data(), r.seq);
  store_be64(h.data() + 8, r.capture_ts_ns);
  store_be64(h.data() + 16, r.session_ts_ns);
  h[24] = r.codec_id;
  h[25] = 0;
  store_be32(h.data() + 26, r.payload_len);
  return h;
}

RecordHeader decode_record_header(const std::uint8_t* b) {
  RecordHeader r;
  r.seq = load_be64(b);
  r.capture_ts_ns = load_be64(b + 8);
  r.session_ts_ns = load_be64(b + 16);
  r.codec_id = b[24];
  r.payload_len = load_be32(b + 26);
  return r;
}

std::string chunk_file_name(std::uint32_t chunk_index) {
  char name[32];
  std::snprintf(name, sizeof name, "chunk-%06u.dhc", chunk_index);
  return name;
}

fs::path stream_dir(const fs::path& recording, std::uint32_t stream_id) {
  return recording / "streams" / std::to_string(stream_id);
}

fs::path chunk_path(const fs::path& recording, std::uint32_t stream_id, std::uint32_t chunk_index) {
  return stream_dir(recording, stream_id) / chunk_file_name(chunk_index);
}

fs::path index_path(const fs::path& recording, std::uint32_t stream_id) {
  return stream_dir(recording, stream_id) / "index.dhi";
}

Bytes encode_index(const std::vector<IndexEntry>& entries) {
  Bytes out;
  out.reserve(entries.size() * kIndexEntrySize);
  ByteWriter w(out);
  for (const auto& e : entries) {
    w.u64(e.session_ts_ns);
    w.u32(e.chunk_index);
    w.u64(e.byte_offset);
  }
  return out;
}

std::vector<IndexEntry> decode_index(ByteView bytes) {
  if (bytes.size() % kIndexEntrySize != 0) {
    throw Error(Errc::Corrupt, "index size " + std::to_string(bytes.size()) +
                                   " is not a multiple of " + std::to_string(kIndexEntrySize));
  }
  std::vector<IndexEntry> out(bytes.size() / kIndexEntrySize);
  ByteReader r(bytes);
  for (auto& e : out) {
    e.session_ts_ns = r.u64();
    e.chunk_index = r.u32();
    e.byte_offset = r.u64();
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

bool read_fully(std::FILE* f, std::uint8_t* out, std::size_t n) {
  return std::fread(out, 1, n, f) == n;
}

}  // namespace

ChunkScanResult scan_chunk(const fs::path& path, std::uint32_t stream_id, std::uint32_t chunk_index,
                           const std::function<bool(const RecordView&)>& visit) {
  ChunkScanResult result;
  std::error_code ec;
  auto size = fs::file_size(path, ec);
  File f(std::fopen(path.c_str(), "rb"));
  if (ec || !f) {
    result.end = ScanEnd::Unreadable;
    return result;
  }
  std::array<std::uint8_t, kChunkHeaderSize> head{};
  if (size < kChunkHeaderSize || !read_fully(f.get(), head.data(), head.size())) {
    result.end = ScanEnd::Truncated;
    return result;
  }
  if (head != encode_chunk_header(stream_id, chunk_index)) {
    result.end = ScanEnd::BadChunkHeader;
    return result;
  }

  std::uint64_t offset = kChunkHeaderSize;
  Bytes payload;
  while (offset < size) {
    std::array<std::uint8_t, kRecordHeaderSize> rh{};
    if (size - offset < kRecordOverhead || !read_fully(f.get(), rh.data(), rh.size())) {
      result.end = ScanEnd::Truncated;
      result.stop_offset = offset;
      return result;
    }
    RecordView view;
    view.offset = offset;
    view.header = decode_record_header(rh.data());
    if (size - offset < kRecordOverhead + std::uint64_t{view.header.payload_len}) {
      result.end = ScanEnd::Truncated;
      result.stop_offset = offset;
      return result;
    }
    payload.resize(view.header.payload_len);
    std::array<std::uint8_t, 4> trailer{};
    if (!read_fully(f.get(), payload.data(), payload.size()) ||
        !read_fully(f.get(), trailer.data(), trailer.size())) {
      result.end = ScanEnd::Truncated;
      result.stop_offset = offset;
      return result;
    }
    view.computed_crc = wire::crc32c_extend(wire::crc32c(rh), payload);
    view.stored_crc = load_be32(trailer.data());
    view.crc_ok = view.computed_crc == view.stored_crc;
    view.payload = payload;
    offset += kRecordOverhead + view.header.payload_len;
    ++result.records;
    if (!visit(view)) {
      result.stop_offset = offset;
      return result;
    }
  }
  result.stop_offset = offset;
  return result;
}

Bytes read_file(const fs::path& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string() + ": " + std::strerror(errno));
  Bytes out;
  std::array<std::uint8_t, 1 << 16> buf{};
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), f.get())) > 0) {
    out.insert(out.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(got));
  }
  if (std::ferror(f.get())) throw Error(Errc::IoError, "cannot read " + path.string());
  return out;
}

void write_file_atomic(const fs::path& path, ByteView data) {
  auto tmp = path;
  tmp += ".tmp";
  {
    File f(std::fopen(tmp.c_str(), "wb"));
    if (!f) {
      throw Error(Errc::WriteFailed, "cannot create " + tmp.string() + ": " + std::strerror(errno));
    }
    if (std::fwrite(data.data(), 1, data.size(), f.get()) != data.size() ||
        std::fflush(f.get()) != 0) {
      throw Error(Errc::WriteFailed, "cannot write " + tmp.string() + ": " + std::strerror(errno));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::WriteFailed, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace dhub::record
