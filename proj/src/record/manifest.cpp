// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/record/manifest.hpp"

#include <algorithm>

#include "dhub/codec/registry.hpp"
#include "dhub/core/error.hpp"

namespace dhub::record {

using nlohmann::json;

void StreamManifest::account(std::uint64_t seq, std::uint64_t session_ts_ns,
                             std::uint64_t payload_len) {
  if (last_seq) {
    drop_count += seq - *last_seq - 1;
  } else {
    drop_count += seq;
    first_seq = seq;
    first_session_ts_ns = session_ts_ns;
  }
  last_seq = seq;
  last_session_ts_ns = session_ts_ns;
  first_session_ts_ns = std::min(*first_session_ts_ns, session_ts_ns);
  ++frame_count;
  byte_count += payload_len;
}

double StreamManifest::mean_fps() const {
  if (frame_count < 2 || !first_session_ts_ns || !last_session_ts_ns ||
      *last_session_ts_ns <= *first_session_ts_ns) {
    return 0.0;
  }
  return static_cast<double>(frame_count - 1) * 1e9 /
         static_cast<double>(*last_session_ts_ns - *first_session_ts_ns);
}

double StreamManifest::duration_s() const {
  if (!first_session_ts_ns || !last_session_ts_ns) return 0.0;
  return static_cast<double>(*last_session_ts_ns - *first_session_ts_ns) / 1e9;
}

const StreamManifest* RecordingManifest::find(std::uint32_t stream_id) const {
  for (const auto& s : streams) {
    if (s.stream_id() == stream_id) return &s;
  }
  return nullptr;
}

std::uint64_t RecordingManifest::total_frames() const {
  std::uint64_t n = 0;
  for (const auto& s : streams) n += s.frame_count;
  return n;
}

std::uint64_t RecordingManifest::total_bytes() const {
  std::uint64_t n = 0;
  for (const auto& s : streams) n += s.byte_count;
  return n;
}

namespace {

json optional_u64(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::uint64_t> read_optional_u64(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::uint64_t>();
}

json codecs_json(const std::vector<ExternalCodecConfig>& codecs) {
  json out = json::array();
  for (const auto& c : codecs) {
    out.push_back(
        {{"codec_id", c.codec_id}, {"encoder", c.encoder}, {"decoder", c.decoder}, {"lossy", c.lossy}});
  }
  return out;
}

std::vector<ExternalCodecConfig> codecs_from_json(const json& j) {
  std::vector<ExternalCodecConfig> out;
  if (!j.is_array()) return out;
  for (const auto& c : j) {
    out.push_back({c.at("codec_id").get<std::uint8_t>(), c.at("encoder").get<std::string>(),
                   c.at("decoder").get<std::string>(), c.value("lossy", false)});
  }
  return out;
}

json clock_json(const std::map<std::string, clocksync::OffsetEstimate>& clock) {
  json out = json::object();
  for (const auto& [hub, est] : clock) out[hub] = clocksync::to_json(est);
  return out;
}

std::map<std::string, clocksync::OffsetEstimate> clock_from_json(const json& j) {
  std::map<std::string, clocksync::OffsetEstimate> out;
  if (!j.is_object()) return out;
  for (const auto& [hub, est] : j.items()) out[hub] = clocksync::offset_estimate_from_json(est);
  return out;
}

StreamConfig stream_config_from_json(const json& j, const std::string& path) {
  std::vector<Violation> problems;
  auto cfg = parse_stream_config(j, problems, path);
  if (!cfg || !problems.empty()) {
    std::string why = problems.empty() ? "malformed stream" : problems.front().path + ": " +
                                                                  problems.front().message;
    throw Error(Errc::BadJson, why);
  }
  return *cfg;
}

}  // namespace

json to_json(const RecordingManifest& m) {
  json streams = json::array();
  for (const auto& s : m.streams) {
    json chunks = json::array();
    for (const auto& c : s.chunks) {
      chunks.push_back({{"file", c.file},
                        {"chunk_index", c.chunk_index},
                        {"records", c.records},
                        {"bytes", c.bytes},
                        {"crc32c", c.crc32c}});
    }
    json entry = to_json(s.config);
    entry["codec_id"] = s.config.adapter.codec_id;
    entry["codec"] = std::string(codec::codec_name(s.config.adapter.codec_id));
    entry["lossy"] = s.lossy;
    entry["frame_count"] = s.frame_count;
    entry["byte_count"] = s.byte_count;
    entry["first_session_ts_ns"] = optional_u64(s.first_session_ts_ns);
    entry["last_session_ts_ns"] = optional_u64(s.last_session_ts_ns);
    entry["first_seq"] = optional_u64(s.first_seq);
    entry["last_seq"] = optional_u64(s.last_seq);
    entry["drop_count"] = s.drop_count;
    entry["hub_dropped"] = s.hub_dropped;
    entry["mean_fps"] = s.mean_fps();
    entry["duration_s"] = s.duration_s();
    entry["chunks"] = std::move(chunks);
    streams.push_back(std::move(entry));
  }
  return {{"format_version", m.format_version},
          {"session_name", m.session_name},
          {"created_ts_ns", m.created_ts_ns},
          {"finalized_ts_ns", m.finalized_ts_ns},
          {"degraded", m.degraded},
          {"repaired", m.repaired},
          {"clock", clock_json(m.clock)},
          {"codecs", codecs_json(m.codecs)},
          {"total_frames", m.total_frames()},
          {"total_bytes", m.total_bytes()},
          {"streams", std::move(streams)}};
}

RecordingManifest manifest_from_json(const json& j) {
  try {
    RecordingManifest m;
    m.format_version = j.at("format_version").get<std::uint32_t>();
    m.session_name = j.at("session_name").get<std::string>();
    m.created_ts_ns = j.at("created_ts_ns").get<std::uint64_t>();
    m.finalized_ts_ns = j.value("finalized_ts_ns", std::uint64_t{0});
    m.degraded = j.value("degraded", false);
    m.repaired = j.value("repaired", false);
    m.clock = clock_from_json(j.value("clock", json::object()));
    m.codecs = codecs_from_json(j.value("codecs", json::array()));
    const auto& streams = j.at("streams");
    for (std::size_t i = 0; i < streams.size(); ++i) {
      const auto& e = streams[i];
      StreamManifest s;
      s.config = stream_config_from_json(e, "streams[" + std::to_string(i) + "]");
      s.lossy = e.value("lossy", false);
      s.frame_count = e.at("frame_count").get<std::uint64_t>();
      s.byte_count = e.at("byte_count").get<std::uint64_t>();
      s.first_session_ts_ns = read_optional_u64(e, "first_session_ts_ns");
      s.last_session_ts_ns = read_optional_u64(e, "last_session_ts_ns");
      s.first_seq = read_optional_u64(e, "first_seq");
      s.last_seq = read_optional_u64(e, "last_seq");
      s.drop_count = e.value("drop_count", std::uint64_t{0});
      s.hub_dropped = e.value("hub_dropped", std::uint64_t{0});
      for (const auto& c : e.at("chunks")) {
        s.chunks.push_back({c.at("file").get<std::string>(), c.at("chunk_index").get<std::uint32_t>(),
                            c.at("records").get<std::uint64_t>(), c.at("bytes").get<std::uint64_t>(),
                            c.at("crc32c").get<std::uint32_t>()});
      }
      m.streams.push_back(std::move(s));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(Errc::BadJson, std::string("malformed manifest: ") + e.what());
  }
}

json to_json(const PartialInfo& p) {
  json streams = json::array();
  for (const auto& s : p.streams) streams.push_back(to_json(s));
  return {{"format_version", kFormatVersion},
          {"session_name", p.session_name},
          {"created_ts_ns", p.created_ts_ns},
          {"degraded", p.degraded},
          {"clock", clock_json(p.clock)},
          {"codecs", codecs_json(p.codecs)},
          {"streams", std::move(streams)}};
}

PartialInfo partial_from_json(const json& j) {
  try {
    PartialInfo p;
    p.session_name = j.at("session_name").get<std::string>();
    p.created_ts_ns = j.at("created_ts_ns").get<std::uint64_t>();
    p.degraded = j.value("degraded", false);
    p.clock = clock_from_json(j.value("clock", json::object()));
    p.codecs = codecs_from_json(j.value("codecs", json::array()));
    const auto& streams = j.at("streams");
    for (std::size_t i = 0; i < streams.size(); ++i) {
      p.streams.push_back(stream_config_from_json(streams[i], "streams[" + std::to_string(i) + "]"));
    }
    return p;
  } catch (const json::exception& e) {
    throw Error(Errc::BadJson, std::string("malformed partial marker: ") + e.what());
  }
}

}  // namespace dhub::record
