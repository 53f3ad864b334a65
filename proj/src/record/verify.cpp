// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/record/verify.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <tuple>

#include "dhub/codec/registry.hpp"
#include "dhub/core/error.hpp"
#include "dhub/record/format.hpp"
#include "dhub/record/writer.hpp"
#include "dhub/simdev/adapter.hpp"
#include "dhub/wire/crc32c.hpp"

namespace dhub::record {

using nlohmann::json;

namespace {

constexpr double kPoseTolerance = 1e-9;

/// Chunk indexes present on disk for one stream, ascending.
std::vector<std::uint32_t> chunks_on_disk(const fs::path& dir, std::uint32_t stream_id) {
  static const std::regex kName(R"(chunk-(\d{6})\.dhc)");
  std::vector<std::uint32_t> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(stream_dir(dir, stream_id), ec)) {
    std::smatch m;
    auto name = entry.path().filename().string();
    if (std::regex_match(name, m, kName)) out.push_back(static_cast<std::uint32_t>(std::stoul(m[1])));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string chunk_location(std::uint32_t stream_id, std::uint32_t chunk_index) {
  return "streams/" + std::to_string(stream_id) + "/" + chunk_file_name(chunk_index);
}

std::string at_offset(std::uint32_t stream_id, std::uint32_t chunk_index, std::uint64_t offset) {
  return chunk_location(stream_id, chunk_index) + " offset " + std::to_string(offset);
}

std::optional<json> load_json(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  Bytes bytes = read_file(path);
  auto j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::BadJson, path.string() + " is not valid JSON");
  return j;
}

double pose_residual(const Pose& a, const Pose& b) {
  double r = 0.0;
  for (int i = 0; i < 3; ++i) r = std::max(r, std::abs(a.position[i] - b.position[i]));
  for (int i = 0; i < 4; ++i) r = std::max(r, std::abs(a.orientation[i] - b.orientation[i]));
  return r;
}

class StreamVerifier {
 public:
  StreamVerifier(const fs::path& dir, const StreamConfig& cfg, const StreamManifest* manifest,
                 const codec::CodecRegistry& codecs, const VerifyOptions& options,
                 std::vector<Finding>& findings)
      : dir_(dir), cfg_(cfg), manifest_(manifest), codecs_(codecs), options_(options), findings_(findings) {
    check_.stream_id = cfg.descriptor.stream_id;
  }

  StreamCheck run() {
    auto id = check_.stream_id;
    std::vector<std::uint32_t> chunk_ids;
    if (manifest_) {
      for (const auto& c : manifest_->chunks) chunk_ids.push_back(c.chunk_index);
      std::set<std::uint32_t> listed(chunk_ids.begin(), chunk_ids.end());
      for (auto idx : chunks_on_disk(dir_, id)) {
        if (listed.count(idx) == 0) {
          add("EXTRA_CHUNK", chunk_location(id, idx), "chunk file is not listed in the manifest");
        }
      }
    } else {
      chunk_ids = chunks_on_disk(dir_, id);
    }
    for (std::size_t i = 0; i < chunk_ids.size(); ++i) {
      verify_chunk(chunk_ids[i], manifest_ ? &manifest_->chunks[i] : nullptr);
    }
    if (manifest_) {
      check_manifest_totals();
      check_index();
    }
    return check_;
  }

 private:
  void add(std::string code, std::string location, std::string message) {
    findings_.push_back({std::move(code), std::move(location), std::move(message)});
  }

  void verify_chunk(std::uint32_t chunk_index, const ChunkInfo* info) {
    auto id = check_.stream_id;
    auto path = chunk_path(dir_, id, chunk_index);
    std::error_code ec;
    if (!fs::exists(path, ec)) {
      add("MISSING_CHUNK", chunk_location(id, chunk_index), "chunk file is missing");
      return;
    }
    auto header = encode_chunk_header(id, chunk_index);
    std::uint32_t file_crc = wire::crc32c(header);
    std::uint64_t records = 0;
    std::uint64_t crc_failures = 0;

    auto result = scan_chunk(path, id, chunk_index, [&](const RecordView& r) {
      ++records;
      ++check_.records;
      file_crc = wire::crc32c_combine(file_crc, r.computed_crc, kRecordHeaderSize + r.payload.size());
      std::array<std::uint8_t, 4> trailer{};
      store_be32(trailer.data(), r.stored_crc);
      file_crc = wire::crc32c_extend(file_crc, trailer);
      if (!r.crc_ok) {
        ++crc_failures;
        ++check_.crc_failures;
        add("CRC_MISMATCH", at_offset(id, chunk_index, r.offset), "record checksum does not match");
        return true;
      }
      payload_bytes_ += r.header.payload_len;
      seen_.emplace_back(r.header.session_ts_ns, chunk_index, r.offset);
      check_seq(r, chunk_index);
      if (options_.check_payloads) check_payload(r, chunk_index);
      return true;
    });

    switch (result.end) {
      case ScanEnd::Complete: break;
      case ScanEnd::Truncated:
        add("TRUNCATED", at_offset(id, chunk_index, result.stop_offset), "chunk ends inside a record");
        break;
      case ScanEnd::BadChunkHeader:
        add("BAD_CHUNK_HEADER", chunk_location(id, chunk_index), "chunk header does not match its name");
        return;
      case ScanEnd::Unreadable:
        add("UNREADABLE", chunk_location(id, chunk_index), "chunk file cannot be read");
        return;
    }
    if (info == nullptr) return;
    if (info->records != records) {
      add("COUNT_MISMATCH", chunk_location(id, chunk_index),
          "manifest lists " + std::to_string(info->records) + " records, found " + std::to_string(records));
    }
    auto size = fs::file_size(path, ec);
    if (!ec && size != info->bytes) {
      add("SIZE_MISMATCH", chunk_location(id, chunk_index),
          "manifest lists " + std::to_string(info->bytes) + " bytes, file has " + std::to_string(size));
    } else if (crc_failures == 0 && result.end == ScanEnd::Complete && file_crc != info->crc32c) {
      add("CHUNK_CHECKSUM", chunk_location(id, chunk_index), "whole-file checksum does not match the manifest");
    }
  }

  void check_seq(const RecordView& r, std::uint32_t chunk_index) {
    auto seq = r.header.seq;
    if (last_seq_ && seq <= *last_seq_) {
      add("SEQ_ORDER", at_offset(check_.stream_id, chunk_index, r.offset),
          "seq " + std::to_string(seq) + " follows " + std::to_string(*last_seq_));
      return;
    }
    check_.seq_gaps += last_seq_ ? seq - *last_seq_ - 1 : seq;
    last_seq_ = seq;
  }

  void check_payload(const RecordView& r, std::uint32_t chunk_index) {
    auto codec_id = r.header.codec_id;
    if (!codecs_.contains(codec_id)) {
      add("UNKNOWN_CODEC", at_offset(check_.stream_id, chunk_index, r.offset),
          "codec " + std::to_string(codec_id) + " is not registered");
      return;
    }
    Bytes decoded;
    try {
      decoded = codecs_.decode(codec_id, r.payload, payload_size(cfg_.descriptor));
    } catch (const Error& e) {
      add("DECODE_FAILED", at_offset(check_.stream_id, chunk_index, r.offset), e.what());
      return;
    }
    if (codecs_.lossy(codec_id)) return;
    ++check_.payload_checked;
    if (cfg_.adapter.type == AdapterType::SimPose) {
      Pose got;
      try {
        got = parse_pose(decoded);
      } catch (const Error& e) {
        add("PAYLOAD_MISMATCH", at_offset(check_.stream_id, chunk_index, r.offset), e.what());
        return;
      }
      Pose want = parse_pose(simdev::simulated_payload(cfg_, r.header.seq));
      double residual = pose_residual(got, want);
      check_.max_pose_residual = std::max(check_.max_pose_residual, residual);
      if (!(residual < kPoseTolerance)) {
        add("POSE_RESIDUAL", at_offset(check_.stream_id, chunk_index, r.offset),
            "pose deviates from the trajectory by " + std::to_string(residual));
      }
      return;
    }
    if (decoded != simdev::simulated_payload(cfg_, r.header.seq)) {
      add("PAYLOAD_MISMATCH", at_offset(check_.stream_id, chunk_index, r.offset),
          "payload differs from the simulated frame for seq " + std::to_string(r.header.seq));
    }
  }

  void check_manifest_totals() {
    const auto& m = *manifest_;
    auto loc = "streams/" + std::to_string(check_.stream_id);
    std::uint64_t good = check_.records - check_.crc_failures;
    if (m.frame_count != check_.records) {
      add("COUNT_MISMATCH", loc,
          "manifest frame_count " + std::to_string(m.frame_count) + ", found " + std::to_string(check_.records));
    }
    if (check_.crc_failures == 0 && m.byte_count != payload_bytes_) {
      add("BYTES_MISMATCH", loc,
          "manifest byte_count " + std::to_string(m.byte_count) + ", found " + std::to_string(payload_bytes_));
    }
    if (check_.crc_failures == 0 && good > 0 && m.drop_count != check_.seq_gaps) {
      add("DROP_COUNT_MISMATCH", loc,
          "seq gaps total " + std::to_string(check_.seq_gaps) + " but manifest drop_count is " +
              std::to_string(m.drop_count));
    }
  }

  void check_index() {
    auto id = check_.stream_id;
    auto loc = "streams/" + std::to_string(id) + "/index.dhi";
    std::vector<IndexEntry> index;
    try {
      index = decode_index(read_file(index_path(dir_, id)));
    } catch (const Error& e) {
      add("INDEX_CORRUPT", loc, e.what());
      return;
    }
    if (index.size() != manifest_->frame_count) {
      add("INDEX_MISMATCH", loc,
          std::to_string(index.size()) + " entries for " + std::to_string(manifest_->frame_count) + " frames");
      return;
    }
    if (!std::is_sorted(index.begin(), index.end(), [](const IndexEntry& a, const IndexEntry& b) {
          return a.session_ts_ns < b.session_ts_ns;
        })) {
      add("INDEX_UNSORTED", loc, "entries are not sorted by session time");
    }
    if (check_.crc_failures > 0) return;
    std::vector<std::tuple<std::uint64_t, std::uint32_t, std::uint64_t>> listed;
    listed.reserve(index.size());
    for (const auto& e : index) listed.emplace_back(e.session_ts_ns, e.chunk_index, e.byte_offset);
    auto seen = seen_;
    std::sort(listed.begin(), listed.end());
    std::sort(seen.begin(), seen.end());
    if (listed != seen) add("INDEX_MISMATCH", loc, "entries do not match the records on disk");
  }

  const fs::path& dir_;
  const StreamConfig& cfg_;
  const StreamManifest* manifest_;
  const codec::CodecRegistry& codecs_;
  const VerifyOptions& options_;
  std::vector<Finding>& findings_;
  StreamCheck check_;
  std::optional<std::uint64_t> last_seq_;
  std::uint64_t payload_bytes_ = 0;
  std::vector<std::tuple<std::uint64_t, std::uint32_t, std::uint64_t>> seen_;
};

}  // namespace

VerifyReport verify_recording(const fs::path& dir, const VerifyOptions& options) {
  VerifyReport report;
  report.recording = dir.filename().string();
  std::optional<RecordingManifest> manifest;
  std::vector<StreamConfig> configs;
  std::vector<ExternalCodecConfig> codec_configs;
  try {
    if (auto j = load_json(dir / kManifestName)) {
      manifest = manifest_from_json(*j);
      for (const auto& s : manifest->streams) configs.push_back(s.config);
      codec_configs = manifest->codecs;
    } else if (auto p = load_json(dir / kPartialName)) {
      report.partial = true;
      auto info = partial_from_json(*p);
      configs = info.streams;
      codec_configs = info.codecs;
      report.findings.push_back({"PARTIAL", kPartialName, "recording was not finalized; run repair"});
    } else {
      report.findings.push_back({"NOT_A_RECORDING", ".", "neither manifest.json nor .partial exists"});
      return report;
    }
  } catch (const Error& e) {
    std::error_code ec;
    bool has_manifest = fs::exists(dir / kManifestName, ec);
    report.findings.push_back({"BAD_MANIFEST", has_manifest ? kManifestName : kPartialName, e.what()});
    return report;
  }

  codec::CodecRegistry codecs;
  try {
    codecs.register_session_codecs(codec_configs);
  } catch (const Error& e) {
    report.findings.push_back({"BAD_MANIFEST", kManifestName, e.what()});
  }
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const StreamManifest* sm = manifest ? &manifest->streams[i] : nullptr;
    StreamVerifier v(dir, configs[i], sm, codecs, options, report.findings);
    report.streams.push_back(v.run());
  }
  return report;
}

json to_json(const VerifyReport& report) {
  json findings = json::array();
  for (const auto& f : report.findings) {
    findings.push_back({{"code", f.code}, {"location", f.location}, {"message", f.message}});
  }
  json streams = json::array();
  for (const auto& s : report.streams) {
    streams.push_back({{"stream_id", s.stream_id},
                       {"records", s.records},
                       {"crc_failures", s.crc_failures},
                       {"seq_gaps", s.seq_gaps},
                       {"payload_checked", s.payload_checked},
                       {"max_pose_residual", s.max_pose_residual}});
  }
  return {{"recording", report.recording},
          {"partial", report.partial},
          {"clean", report.clean()},
          {"streams", std::move(streams)},
          {"findings", std::move(findings)}};
}

RepairResult repair_recording(const fs::path& dir) {
  PartialInfo info;
  std::optional<RecordingManifest> old;
  if (auto p = load_json(dir / kPartialName)) {
    info = partial_from_json(*p);
  } else if (auto j = load_json(dir / kManifestName)) {
    old = manifest_from_json(*j);
    info.session_name = old->session_name;
    info.created_ts_ns = old->created_ts_ns;
    info.degraded = old->degraded;
    info.clock = old->clock;
    info.codecs = old->codecs;
    for (const auto& s : old->streams) info.streams.push_back(s.config);
  } else {
    throw Error(Errc::NotFound, "no manifest or partial marker in " + dir.string());
  }

  codec::CodecRegistry codecs;
  codecs.register_session_codecs(info.codecs);

  RepairResult result;
  auto& m = result.manifest;
  m.session_name = info.session_name;
  m.created_ts_ns = info.created_ts_ns;
  m.degraded = info.degraded;
  m.clock = info.clock;
  m.codecs = info.codecs;
  m.repaired = true;

  for (const auto& cfg : info.streams) {
    auto id = cfg.descriptor.stream_id;
    StreamManifest sm;
    sm.config = cfg;
    sm.lossy = codecs.contains(cfg.adapter.codec_id) && codecs.lossy(cfg.adapter.codec_id);
    if (old) {
      if (const auto* prev = old->find(id)) sm.hub_dropped = prev->hub_dropped;
    }
    RepairedStream rs;
    rs.stream_id = id;
    std::vector<IndexEntry> index;
    bool stopped = false;
    std::uint32_t expected_index = 0;

    for (auto chunk_index : chunks_on_disk(dir, id)) {
      auto path = chunk_path(dir, id, chunk_index);
      std::error_code ec;
      auto size = fs::file_size(path, ec);
      if (stopped || chunk_index != expected_index) {
        // Everything after the first damage is set aside, not deleted.
        stopped = true;
        rs.discarded_bytes += size;
        auto orphan = path;
        orphan += ".orphan";
        fs::rename(path, orphan, ec);
        continue;
      }
      ++expected_index;

      ChunkInfo ci{chunk_location(id, chunk_index), chunk_index, 0, kChunkHeaderSize, 0};
      auto header = encode_chunk_header(id, chunk_index);
      ci.crc32c = wire::crc32c(header);
      std::optional<std::uint64_t> cut;
      std::optional<std::uint64_t> last_seq = sm.last_seq;

      auto scan = scan_chunk(path, id, chunk_index, [&](const RecordView& r) {
        if (!r.crc_ok || (last_seq && r.header.seq <= *last_seq)) {
          cut = r.offset;
          return false;
        }
        last_seq = r.header.seq;
        index.push_back({r.header.session_ts_ns, chunk_index, r.offset});
        sm.account(r.header.seq, r.header.session_ts_ns, r.header.payload_len);
        ++ci.records;
        ci.bytes += kRecordOverhead + r.payload.size();
        ci.crc32c = wire::crc32c_combine(ci.crc32c, r.computed_crc, kRecordHeaderSize + r.payload.size());
        std::array<std::uint8_t, 4> trailer{};
        store_be32(trailer.data(), r.stored_crc);
        ci.crc32c = wire::crc32c_extend(ci.crc32c, trailer);
        return true;
      });
      if (!cut && scan.end != ScanEnd::Complete) {
        cut = scan.end == ScanEnd::Truncated && scan.stop_offset >= kChunkHeaderSize ? scan.stop_offset : 0;
      }
      if (cut) {
        stopped = true;
        rs.discarded_bytes += size - std::min<std::uint64_t>(size, ci.records ? *cut : 0);
        if (ci.records == 0) {
          fs::remove(path, ec);
          continue;
        }
        fs::resize_file(path, *cut, ec);
        if (ec) throw Error(Errc::WriteFailed, "cannot truncate " + path.string() + ": " + ec.message());
      }
      sm.chunks.push_back(ci);
    }
    rs.recovered = sm.frame_count;
    std::error_code mkdir_ec;
    fs::create_directories(stream_dir(dir, id), mkdir_ec);
    std::stable_sort(index.begin(), index.end(),
                     [](const IndexEntry& a, const IndexEntry& b) { return a.session_ts_ns < b.session_ts_ns; });
    write_file_atomic(index_path(dir, id), encode_index(index));
    m.streams.push_back(std::move(sm));
    result.streams.push_back(rs);
  }
  m.finalized_ts_ns = wall_clock_ns();
  std::string text = to_json(m).dump(2);
  write_file_atomic(dir / kManifestName,
                    ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  std::error_code ec;
  fs::remove(dir / kPartialName, ec);
  return result;
}

}  // namespace dhub::record
