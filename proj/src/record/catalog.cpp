// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/record/catalog.hpp"

#include <algorithm>
#include <fstream>

#include "dhub/core/error.hpp"
#include "dhub/record/format.hpp"
#include "dhub/record/manifest.hpp"

namespace dhub::record {

using nlohmann::json;

namespace {

std::optional<json> read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return std::nullopt;
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

}  // namespace

bool is_recording_dir(const fs::path& dir) {
  std::error_code ec;
  return fs::is_regular_file(dir / kManifestName, ec) || fs::is_regular_file(dir / kPartialName, ec);
}

RecordingSummary summarize_recording(const fs::path& dir, const std::string& name) {
  RecordingSummary s;
  s.name = name;
  std::error_code ec;
  if (fs::exists(dir / kManifestName, ec)) {
    s.state = "corrupt";
    if (auto j = read_json(dir / kManifestName)) {
      try {
        auto m = manifest_from_json(*j);
        s.state = "complete";
        s.session_name = m.session_name;
        s.created_ts_ns = m.created_ts_ns;
        s.streams = m.streams.size();
        s.total_frames = m.total_frames();
        s.total_bytes = m.total_bytes();
        s.degraded = m.degraded;
        s.repaired = m.repaired;
      } catch (const Error&) {
      }
    }
    return s;
  }
  s.state = "partial";
  if (auto j = read_json(dir / kPartialName)) {
    try {
      auto p = partial_from_json(*j);
      s.session_name = p.session_name;
      s.created_ts_ns = p.created_ts_ns;
      s.streams = p.streams.size();
      s.degraded = p.degraded;
    } catch (const Error&) {
    }
  }
  return s;
}

std::vector<RecordingSummary> list_recordings(const fs::path& root) {
  std::vector<std::pair<std::string, fs::path>> found;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(root, ec)) {
    if (!e.is_directory()) continue;
    if (is_recording_dir(e.path())) {
      found.emplace_back(e.path().filename().string(), e.path());
      continue;
    }
    std::error_code inner_ec;
    for (const auto& inner : fs::directory_iterator(e.path(), inner_ec)) {
      if (inner.is_directory() && is_recording_dir(inner.path())) {
        found.emplace_back(e.path().filename().string() + "/" + inner.path().filename().string(), inner.path());
      }
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<RecordingSummary> out;
  for (const auto& [name, path] : found) out.push_back(summarize_recording(path, name));
  return out;
}

std::optional<fs::path> find_recording(const fs::path& root, const std::string& name) {
  if (name.empty()) return std::nullopt;
  fs::path rel(name);
  bool climbs = false;
  for (const auto& part : rel) climbs = climbs || part == "..";
  if (!climbs && rel.is_relative() && is_recording_dir(root / rel)) return root / rel;
  // Fall back to a literal path, for recordings outside the storage root.
  if (is_recording_dir(rel)) return rel;
  return std::nullopt;
}

json to_json(const RecordingSummary& s) {
  return {{"name", s.name},
          {"state", s.state},
          {"session_name", s.session_name},
          {"created_ts_ns", s.created_ts_ns},
          {"streams", s.streams},
          {"total_frames", s.total_frames},
          {"total_bytes", s.total_bytes},
          {"degraded", s.degraded},
          {"repaired", s.repaired}};
}

}  // namespace dhub::record
