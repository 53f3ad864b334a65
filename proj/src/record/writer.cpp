// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/record/writer.hpp"

#include <fcntl.h>
#include <sys/uio.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <thread>

#include "dhub/codec/registry.hpp"
#include "dhub/wire/crc32c.hpp"

namespace dhub::record {

using Clock = std::chrono::steady_clock;

std::uint64_t wall_clock_ns() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count());
}

fs::path unique_recording_dir(const fs::path& root, const std::string& session_name) {
  fs::path candidate = root / session_name;
  for (int n = 2; fs::exists(candidate); ++n) {
    candidate = root / (session_name + "-" + std::to_string(n));
  }
  return candidate;
}

namespace {

[[noreturn]] void throw_io(const std::string& what, int err) {
  throw Error(Errc::WriteFailed, what + ": " + std::strerror(err));
}

bool writev_all(int fd, iovec* iov, int count) {
  while (count > 0) {
    ssize_t n = ::writev(fd, iov, std::min(count, IOV_MAX));
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    auto left = static_cast<std::size_t>(n);
    while (count > 0 && left >= iov->iov_len) {
      left -= iov->iov_len;
      ++iov;
      --count;
    }
    if (count > 0) {
      iov->iov_base = static_cast<std::uint8_t*>(iov->iov_base) + left;
      iov->iov_len -= left;
    }
  }
  return true;
}

struct Pending {
  Frame frame;
  std::optional<std::uint32_t> payload_crc;
};

}  // namespace

struct RecordingWriter::Stream {
  StreamConfig config;
  fs::path root;
  const WriterOptions* options = nullptr;

  // Producer side.
  std::mutex mu;
  std::condition_variable cv_producer;
  std::condition_variable cv_consumer;
  std::deque<Pending> queue;
  bool closing = false;
  std::optional<std::uint64_t> last_seq_in;
  std::optional<Error> error;
  StreamWriteStats stats;

  // Writer side; owned by the writer thread while it runs.
  int fd = -1;
  std::uint32_t chunk_index = 0;
  bool chunk_open = false;
  std::uint64_t chunk_bytes = 0;
  std::uint64_t chunk_records = 0;
  std::uint64_t chunk_first_ts = 0;
  std::uint32_t chunk_crc = 0;
  Bytes staging;
  Clock::time_point last_flush = Clock::now();
  std::vector<ChunkInfo> chunks;
  std::vector<IndexEntry> index;
  StreamManifest summary;

  std::thread thread;

  std::uint32_t id() const { return config.descriptor.stream_id; }

  void flush_staging() {
    if (staging.empty()) return;
    iovec iov{staging.data(), staging.size()};
    if (!writev_all(fd, &iov, 1)) throw_io("write " + current_chunk_name(), errno);
    staging.clear();
  }

  std::string current_chunk_name() const {
    return "streams/" + std::to_string(id()) + "/" + chunk_file_name(chunk_index);
  }

  void close_chunk() {
    if (!chunk_open) return;
    flush_staging();
    if (::close(fd) != 0) throw_io("close " + current_chunk_name(), errno);
    fd = -1;
    chunks.push_back({current_chunk_name(), chunk_index, chunk_records, chunk_bytes, chunk_crc});
    chunk_open = false;
    ++chunk_index;
  }

  void open_chunk(std::uint64_t first_ts) {
    auto path = chunk_path(root, id(), chunk_index);
    fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw_io("open " + path.string(), errno);
    chunk_open = true;
    auto header = encode_chunk_header(id(), chunk_index);
    staging.insert(staging.end(), header.begin(), header.end());
    chunk_bytes = header.size();
    chunk_records = 0;
    chunk_first_ts = first_ts;
    chunk_crc = wire::crc32c(header);
  }

  void write_record(const Pending& p) {
    const Frame& f = p.frame;
    std::uint64_t record_size = kRecordOverhead + f.payload.size();
    if (chunk_open && chunk_records > 0 &&
        (chunk_bytes + record_size > options->chunk_max_bytes ||
         f.session_ts_ns - std::min(f.session_ts_ns, chunk_first_ts) >= options->chunk_max_span_ns)) {
      close_chunk();
    }
    if (!chunk_open) open_chunk(f.session_ts_ns);

    RecordHeader h{f.seq, f.capture_ts_ns, f.session_ts_ns, f.codec_id,
                   static_cast<std::uint32_t>(f.payload.size())};
    auto head = encode_record_header(h);
    std::uint32_t crc = p.payload_crc
                            ? wire::crc32c_combine(wire::crc32c(head), *p.payload_crc, f.payload.size())
                            : wire::crc32c_extend(wire::crc32c(head), f.payload);
    std::array<std::uint8_t, 4> trailer{};
    store_be32(trailer.data(), crc);

    index.push_back({f.session_ts_ns, chunk_index, chunk_bytes});

    if (staging.size() + record_size <= options->buffer_bytes) {
      staging.insert(staging.end(), head.begin(), head.end());
      staging.insert(staging.end(), f.payload.begin(), f.payload.end());
      staging.insert(staging.end(), trailer.begin(), trailer.end());
    } else {
      // Large records bypass the staging buffer.
      iovec iov[4] = {{staging.data(), staging.size()},
                      {head.data(), head.size()},
                      {const_cast<std::uint8_t*>(f.payload.data()), f.payload.size()},
                      {trailer.data(), trailer.size()}};
      if (!writev_all(fd, iov, 4)) throw_io("write " + current_chunk_name(), errno);
      staging.clear();
    }

    chunk_crc = wire::crc32c_extend(
        wire::crc32c_combine(chunk_crc, crc, kRecordHeaderSize + f.payload.size()), trailer);
    chunk_bytes += record_size;
    ++chunk_records;

    summary.account(f.seq, f.session_ts_ns, f.payload.size());

    std::lock_guard lock(mu);
    stats.file_bytes += record_size;
  }

  void maybe_flush() {
    auto now = Clock::now();
    if (chunk_open && now - last_flush >= options->flush_interval) {
      flush_staging();
      last_flush = now;
    }
  }

  void fail(const Error& e) {
    {
      std::lock_guard lock(mu);
      if (error) return;
      error = e;
      queue.clear();
    }
    cv_producer.notify_all();
    if (chunk_open) {
      ::close(fd);
      fd = -1;
      chunk_open = false;
    }
    if (options->on_error) options->on_error(id(), e);
  }

  // Writes one pending frame, turning I/O errors into the stream's failure.
  void process(const Pending& p) {
    try {
      write_record(p);
      maybe_flush();
    } catch (const Error& e) {
      fail(e);
    }
  }

  void run() {
    for (;;) {
      Pending p;
      {
        std::unique_lock lock(mu);
        bool woke = cv_consumer.wait_for(lock, options->flush_interval,
                                         [&] { return closing || !queue.empty(); });
        if (!woke) {
          bool ok = !error;
          lock.unlock();
          if (ok) {
            try {
              maybe_flush();
            } catch (const Error& e) {
              fail(e);
            }
          }
          continue;
        }
        if (queue.empty()) return;  // closing
        p = std::move(queue.front());
        queue.pop_front();
      }
      cv_producer.notify_all();
      if (!has_error()) process(p);
    }
  }

  bool has_error() {
    std::lock_guard lock(mu);
    return error.has_value();
  }

  void finish() {
    if (thread.joinable()) {
      {
        std::lock_guard lock(mu);
        closing = true;
      }
      cv_consumer.notify_all();
      cv_producer.notify_all();
      thread.join();
    }
    if (has_error()) return;
    try {
      close_chunk();
    } catch (const Error& e) {
      fail(e);
    }
  }
};

RecordingWriter::RecordingWriter(fs::path directory, PartialInfo info, WriterOptions options)
    : dir_(std::move(directory)), info_(std::move(info)), options_(std::move(options)) {
  std::error_code ec;
  if (fs::exists(dir_ / kManifestName, ec)) {
    throw Error(Errc::InvalidArgument, dir_.string() + " already holds a finalized recording");
  }
  for (const auto& cfg : info_.streams) {
    auto id = cfg.descriptor.stream_id;
    if (streams_.count(id) != 0) {
      throw Error(Errc::InvalidArgument, "stream " + std::to_string(id) + " declared twice");
    }
    fs::create_directories(stream_dir(dir_, id), ec);
    if (ec) throw Error(Errc::WriteFailed, "cannot create " + stream_dir(dir_, id).string() + ": " + ec.message());
    auto s = std::make_unique<Stream>();
    s->config = cfg;
    s->root = dir_;
    s->options = &options_;
    s->summary.config = cfg;
    s->staging.reserve(options_.buffer_bytes);
    streams_.emplace(id, std::move(s));
  }
  fs::create_directories(dir_, ec);
  if (ec) throw Error(Errc::WriteFailed, "cannot create " + dir_.string() + ": " + ec.message());
  if (info_.created_ts_ns == 0) info_.created_ts_ns = wall_clock_ns();
  write_partial();
  if (options_.threaded) {
    for (auto& [id, s] : streams_) {
      Stream* raw = s.get();
      s->thread = std::thread([raw] { raw->run(); });
    }
  }
}

RecordingWriter::~RecordingWriter() {
  if (!finalized_) shutdown_streams();
}

void RecordingWriter::shutdown_streams() {
  for (auto& [id, s] : streams_) s->finish();
}

void RecordingWriter::write_partial() {
  std::string text;
  {
    std::lock_guard lock(meta_mu_);
    text = to_json(info_).dump(2);
  }
  write_file_atomic(dir_ / kPartialName,
                    ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void RecordingWriter::append(Frame frame, std::optional<std::uint32_t> payload_crc) {
  auto it = streams_.find(frame.stream_id);
  if (it == streams_.end()) {
    throw Error(Errc::UnknownStream, "stream " + std::to_string(frame.stream_id) + " is not part of the recording");
  }
  Stream& s = *it->second;
  std::unique_lock lock(s.mu);
  if (s.error) throw Error(Errc::WriteFailed, s.error->what());
  if (s.closing) throw Error(Errc::InvalidArgument, "recording is finalizing");
  if (s.last_seq_in && frame.seq <= *s.last_seq_in) {
    throw Error(Errc::SeqOrder, "stream " + std::to_string(frame.stream_id) + ": seq " +
                                    std::to_string(frame.seq) + " after " +
                                    std::to_string(*s.last_seq_in));
  }
  if (options_.threaded) {
    s.cv_producer.wait(lock, [&] { return s.queue.size() < options_.queue_frames || s.error || s.closing; });
    if (s.error) throw Error(Errc::WriteFailed, s.error->what());
    if (s.closing) throw Error(Errc::InvalidArgument, "recording is finalizing");
  }
  s.last_seq_in = frame.seq;
  ++s.stats.frames;
  s.stats.payload_bytes += frame.payload.size();

  if (!options_.threaded) {
    lock.unlock();
    s.process(Pending{std::move(frame), payload_crc});
    lock.lock();
    if (s.error) throw Error(Errc::WriteFailed, s.error->what());
    return;
  }
  s.queue.push_back({std::move(frame), payload_crc});
  lock.unlock();
  s.cv_consumer.notify_one();
}

void RecordingWriter::set_clock(const std::string& hub_id, const clocksync::OffsetEstimate& estimate) {
  {
    std::lock_guard lock(meta_mu_);
    info_.clock[hub_id] = estimate;
  }
  try {
    write_partial();
  } catch (const Error&) {
    // The marker is advisory until finalize; chunk writes report real failures.
  }
}

void RecordingWriter::set_hub_dropped(std::uint32_t stream_id, std::uint64_t dropped) {
  std::lock_guard lock(meta_mu_);
  hub_dropped_[stream_id] = dropped;
}

void RecordingWriter::set_degraded(bool degraded) {
  {
    std::lock_guard lock(meta_mu_);
    info_.degraded = degraded;
  }
  try {
    write_partial();
  } catch (const Error&) {
  }
}

bool RecordingWriter::failed() const {
  for (const auto& [id, s] : streams_) {
    std::lock_guard lock(s->mu);
    if (s->error) return true;
  }
  return false;
}

StreamWriteStats RecordingWriter::stats(std::uint32_t stream_id) const {
  auto it = streams_.find(stream_id);
  if (it == streams_.end()) throw Error(Errc::UnknownStream, "stream " + std::to_string(stream_id));
  std::lock_guard lock(it->second->mu);
  return it->second->stats;
}

StreamWriteStats RecordingWriter::totals() const {
  StreamWriteStats t;
  for (const auto& [id, s] : streams_) {
    std::lock_guard lock(s->mu);
    t.frames += s->stats.frames;
    t.payload_bytes += s->stats.payload_bytes;
    t.file_bytes += s->stats.file_bytes;
  }
  return t;
}

RecordingManifest RecordingWriter::finalize() {
  if (finalized_) throw Error(Errc::InvalidArgument, "recording already finalized");
  shutdown_streams();
  for (const auto& [id, s] : streams_) {
    if (s->error) throw Error(Errc::WriteFailed, "stream " + std::to_string(id) + ": " + s->error->what());
  }

  RecordingManifest m;
  {
    std::lock_guard lock(meta_mu_);
    m.session_name = info_.session_name;
    m.created_ts_ns = info_.created_ts_ns;
    m.degraded = info_.degraded;
    m.clock = info_.clock;
    m.codecs = info_.codecs;
  }
  codec::CodecRegistry codecs;
  codecs.register_session_codecs(m.codecs);

  for (auto& [id, s] : streams_) {
    std::stable_sort(s->index.begin(), s->index.end(),
                     [](const IndexEntry& a, const IndexEntry& b) { return a.session_ts_ns < b.session_ts_ns; });
    write_file_atomic(index_path(dir_, id), encode_index(s->index));
    StreamManifest sm = s->summary;
    sm.chunks = s->chunks;
    sm.lossy = codecs.contains(sm.config.adapter.codec_id) && codecs.lossy(sm.config.adapter.codec_id);
    {
      std::lock_guard lock(meta_mu_);
      if (auto it = hub_dropped_.find(id); it != hub_dropped_.end()) sm.hub_dropped = it->second;
    }
    m.streams.push_back(std::move(sm));
  }
  m.finalized_ts_ns = wall_clock_ns();

  std::string text = to_json(m).dump(2);
  write_file_atomic(dir_ / kManifestName,
                    ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  std::error_code ec;
  fs::remove(dir_ / kPartialName, ec);
  if (ec) throw Error(Errc::WriteFailed, "cannot remove marker: " + ec.message());
  finalized_ = true;
  return m;
}

}  // namespace dhub::record
