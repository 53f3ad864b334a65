// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/record/reader.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <map>
#include <mutex>

#include "dhub/core/error.hpp"
#include "dhub/wire/crc32c.hpp"

namespace dhub::record {

struct Recording::Files {
  std::mutex mu;
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> fds;

  ~Files() {
    for (auto& [key, fd] : fds) ::close(fd);
  }

  int get(const fs::path& dir, std::uint32_t stream_id, std::uint32_t chunk_index) {
    std::lock_guard lock(mu);
    auto key = std::make_pair(stream_id, chunk_index);
    if (auto it = fds.find(key); it != fds.end()) return it->second;
    auto path = chunk_path(dir, stream_id, chunk_index);
    int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0) {
      throw Error(Errc::Corrupt, "cannot open " + path.string() + ": " + std::strerror(errno));
    }
    fds.emplace(key, fd);
    return fd;
  }
};

namespace {

bool pread_exact(int fd, std::uint8_t* out, std::size_t n, std::uint64_t offset) {
  while (n > 0) {
    ssize_t got = ::pread(fd, out, n, static_cast<off_t>(offset));
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) return false;
    out += got;
    n -= static_cast<std::size_t>(got);
    offset += static_cast<std::uint64_t>(got);
  }
  return true;
}

}  // namespace

Recording Recording::open(const fs::path& directory) {
  auto manifest_path = directory / kManifestName;
  std::error_code ec;
  if (!fs::exists(manifest_path, ec)) {
    throw Error(Errc::NotFound, "no manifest in " + directory.string());
  }
  Bytes bytes = read_file(manifest_path);
  auto j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::BadJson, manifest_path.string() + " is not valid JSON");
  Recording r;
  r.dir_ = directory;
  r.manifest_ = manifest_from_json(j);
  r.files_ = std::make_shared<Files>();
  return r;
}

const StreamManifest& Recording::stream(std::uint32_t stream_id) const {
  const auto* s = manifest_.find(stream_id);
  if (s == nullptr) {
    throw Error(Errc::UnknownStream, "stream " + std::to_string(stream_id) + " is not in " +
                                         manifest_.session_name);
  }
  return *s;
}

std::vector<IndexEntry> Recording::index(std::uint32_t stream_id) const {
  stream(stream_id);
  auto path = index_path(dir_, stream_id);
  Bytes bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    throw Error(Errc::Corrupt, e.what());
  }
  return decode_index(bytes);
}

codec::CodecRegistry Recording::codecs() const {
  codec::CodecRegistry registry;
  registry.register_session_codecs(manifest_.codecs);
  return registry;
}

Frame Recording::read(std::uint32_t stream_id, const IndexEntry& entry,
                      const codec::CodecRegistry& codecs, bool decode) const {
  const auto& sm = stream(stream_id);
  int fd = files_->get(dir_, stream_id, entry.chunk_index);
  auto where = [&] {
    return "streams/" + std::to_string(stream_id) + "/" + chunk_file_name(entry.chunk_index) +
           " offset " + std::to_string(entry.byte_offset);
  };

  std::array<std::uint8_t, kRecordHeaderSize> head{};
  if (!pread_exact(fd, head.data(), head.size(), entry.byte_offset)) {
    throw Error(Errc::Corrupt, "truncated record at " + where());
  }
  RecordHeader h = decode_record_header(head.data());
  Frame f;
  f.stream_id = stream_id;
  f.seq = h.seq;
  f.capture_ts_ns = h.capture_ts_ns;
  f.session_ts_ns = h.session_ts_ns;
  f.codec_id = h.codec_id;
  f.payload.resize(h.payload_len);
  std::array<std::uint8_t, 4> trailer{};
  if (!pread_exact(fd, f.payload.data(), f.payload.size(), entry.byte_offset + kRecordHeaderSize) ||
      !pread_exact(fd, trailer.data(), trailer.size(),
                   entry.byte_offset + kRecordHeaderSize + h.payload_len)) {
    throw Error(Errc::Corrupt, "truncated record at " + where());
  }
  if (wire::crc32c_extend(wire::crc32c(head), f.payload) != load_be32(trailer.data())) {
    throw Error(Errc::CrcMismatch, "CRC mismatch in " + where());
  }
  if (h.session_ts_ns != entry.session_ts_ns) {
    throw Error(Errc::Corrupt, "index does not match record at " + where());
  }
  if (decode) {
    f.payload = codecs.decode(f.codec_id, f.payload, payload_size(sm.config.descriptor));
    f.codec_id = codec::kRaw;
  }
  return f;
}

std::vector<Frame> Recording::read_range(std::uint32_t stream_id, std::uint64_t t0, std::uint64_t t1,
                                         const codec::CodecRegistry& codecs, bool decode) const {
  std::vector<Frame> out;
  if (t1 <= t0) return out;
  auto entries = index(stream_id);
  auto by_ts = [](const IndexEntry& e, std::uint64_t t) { return e.session_ts_ns < t; };
  auto first = std::lower_bound(entries.begin(), entries.end(), t0, by_ts);
  auto last = std::lower_bound(first, entries.end(), t1, by_ts);
  out.reserve(static_cast<std::size_t>(last - first));
  for (auto it = first; it != last; ++it) out.push_back(read(stream_id, *it, codecs, decode));
  return out;
}

std::vector<std::optional<std::size_t>> align_indices(std::span<const std::uint64_t> master,
                                                      std::span<const std::uint64_t> other,
                                                      AlignMode mode) {
  std::vector<std::optional<std::size_t>> out;
  out.reserve(master.size());
  std::size_t j = 0;  // first index with other[j] > t
  for (std::uint64_t t : master) {
    while (j < other.size() && other[j] <= t) ++j;
    std::optional<std::size_t> pick;
    if (j > 0) pick = j - 1;
    if (mode == AlignMode::Nearest && j < other.size()) {
      if (!pick || other[j] - t < t - other[*pick]) pick = j;
    }
    out.push_back(pick);
  }
  return out;
}

AlignedCursor::AlignedCursor(const Recording& recording, std::vector<std::uint32_t> stream_ids,
                             std::uint32_t master_stream, AlignMode mode, bool decode)
    : recording_(&recording), codecs_(recording.codecs()), ids_(std::move(stream_ids)), decode_(decode) {
  auto m = std::find(ids_.begin(), ids_.end(), master_stream);
  if (m == ids_.end()) {
    throw Error(Errc::UnknownStream,
                "master stream " + std::to_string(master_stream) + " is not among the requested streams");
  }
  master_slot_ = static_cast<std::size_t>(m - ids_.begin());
  for (auto id : ids_) indexes_.push_back(recording.index(id));
  master_index_ = indexes_[master_slot_];

  std::vector<std::uint64_t> master_ts;
  master_ts.reserve(master_index_.size());
  for (const auto& e : master_index_) master_ts.push_back(e.session_ts_ns);
  for (std::size_t slot = 0; slot < ids_.size(); ++slot) {
    std::vector<std::uint64_t> ts;
    ts.reserve(indexes_[slot].size());
    for (const auto& e : indexes_[slot]) ts.push_back(e.session_ts_ns);
    picks_.push_back(slot == master_slot_ ? std::vector<std::optional<std::size_t>>{}
                                          : align_indices(master_ts, ts, mode));
  }
}

std::optional<AlignedTuple> AlignedCursor::next() {
  if (pos_ >= master_index_.size()) return std::nullopt;
  AlignedTuple tuple;
  tuple.t = master_index_[pos_].session_ts_ns;
  tuple.frames.resize(ids_.size());
  for (std::size_t slot = 0; slot < ids_.size(); ++slot) {
    std::optional<std::size_t> pick = slot == master_slot_ ? std::optional<std::size_t>(pos_)
                                                           : picks_[slot][pos_];
    if (pick) tuple.frames[slot] = recording_->read(ids_[slot], indexes_[slot][*pick], codecs_, decode_);
  }
  ++pos_;
  return tuple;
}

AlignedCursor aligned_cursor(const Recording& recording, std::vector<std::uint32_t> stream_ids,
                             std::uint32_t master_stream, AlignMode mode) {
  return AlignedCursor(recording, std::move(stream_ids), master_stream, mode);
}

}  // namespace dhub::record
