// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/core/config.hpp"

#include <cmath>
#include <map>
#include <set>

namespace dhub {

using nlohmann::json;

std::string_view to_string(AdapterType v) {
  switch (v) {
    case AdapterType::SimUs: return "SIM_US";
    case AdapterType::SimPose: return "SIM_POSE";
    case AdapterType::SimRgbd: return "SIM_RGBD";
  }
  return "?";
}

std::optional<AdapterType> parse_adapter_type(std::string_view s) {
  if (s == "SIM_US") return AdapterType::SimUs;
  if (s == "SIM_POSE") return AdapterType::SimPose;
  if (s == "SIM_RGBD") return AdapterType::SimRgbd;
  return std::nullopt;
}

const StreamConfig* SessionConfig::find_stream(std::uint32_t stream_id) const {
  for (const auto& s : streams) {
    if (s.descriptor.stream_id == stream_id) return &s;
  }
  return nullptr;
}

std::vector<StreamConfig> SessionConfig::streams_for_hub(const std::string& hub_id) const {
  std::vector<StreamConfig> out;
  for (const auto& s : streams) {
    if (s.descriptor.source_hub == hub_id) out.push_back(s);
  }
  return out;
}

namespace {

bool is_safe_name(const std::string& s) {
  if (s.empty() || s == "." || s == ".." || s.size() > 128) return false;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

bool valid_rate(double fps) { return std::isfinite(fps) && fps > 0.0; }

std::string stream_path(std::size_t i) { return "streams[" + std::to_string(i) + "]"; }

}  // namespace

std::vector<Violation> validate_session_config(const SessionConfig& cfg) {
  std::vector<Violation> out;
  auto add = [&out](std::string code, std::string path, std::string message) {
    out.push_back({std::move(code), std::move(path), std::move(message)});
  };

  if (!is_safe_name(cfg.session_name)) {
    add("BAD_SESSION_NAME", "session_name",
        "session_name must be 1-128 characters from [A-Za-z0-9._-]");
  }
  if (cfg.storage_dir.empty()) add("EMPTY_STORAGE_DIR", "storage_dir", "storage_dir is empty");
  if (cfg.queue_capacity == 0) add("BAD_QUEUE_CAPACITY", "queue_capacity", "must be > 0");
  if (cfg.metrics_interval_ms == 0) {
    add("BAD_METRICS_INTERVAL", "metrics_interval_ms", "must be > 0");
  }

  std::set<std::string> hub_ids;
  for (std::size_t i = 0; i < cfg.hubs.size(); ++i) {
    const auto& hub = cfg.hubs[i];
    auto path = "hubs[" + std::to_string(i) + "].hub_id";
    if (hub.hub_id.empty()) {
      add("EMPTY_HUB_ID", path, "hub_id is empty");
    } else if (!hub_ids.insert(hub.hub_id).second) {
      add("DUP_HUB_ID", path, "duplicate hub_id '" + hub.hub_id + "'");
    }
  }

  std::set<std::uint8_t> codec_ids{0, 1};
  for (std::size_t i = 0; i < cfg.codecs.size(); ++i) {
    const auto& c = cfg.codecs[i];
    auto path = "codecs[" + std::to_string(i) + "]";
    if (c.codec_id < 128) {
      add("BAD_CODEC_ID", path + ".codec_id", "external codec ids must be in 128-255");
    } else if (!codec_ids.insert(c.codec_id).second) {
      add("DUP_CODEC_ID", path + ".codec_id", "codec id declared twice");
    }
    if (c.encoder.empty() || c.decoder.empty()) {
      add("BAD_CODEC_COMMAND", path, "encoder and decoder commands are required");
    }
  }

  if (cfg.streams.empty()) add("NO_STREAMS", "streams", "at least one stream is required");

  std::set<std::uint32_t> stream_ids;
  // (hub, instance) -> indices of SIM_RGBD streams
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> rgbd_groups;

  for (std::size_t i = 0; i < cfg.streams.size(); ++i) {
    const auto& s = cfg.streams[i];
    const auto& d = s.descriptor;
    auto path = stream_path(i);

    if (!stream_ids.insert(d.stream_id).second) {
      add("DUP_STREAM_ID", path + ".stream_id",
          "stream_id " + std::to_string(d.stream_id) + " is used more than once");
    }
    if (hub_ids.count(d.source_hub) == 0) {
      add("UNKNOWN_HUB", path + ".source_hub", "hub '" + d.source_hub + "' is not in hubs");
    }
    for (const auto& problem : descriptor_problems(d)) {
      auto field = problem == "BAD_FPS"             ? ".nominal_fps"
                   : problem == "BAD_PIXEL_FORMAT" ? ".pixel_format"
                                                   : ".width";
      add(problem, path + field, "descriptor violates " + std::string(to_string(d.kind)) +
                                     " invariants");
    }
    if (s.adapter.fps && !valid_rate(*s.adapter.fps)) {
      add("BAD_FPS", path + ".adapter.fps", "adapter fps must be > 0");
    }
    if (!(s.adapter.jitter_ppm >= 0.0 && s.adapter.jitter_ppm < 500000.0)) {
      add("BAD_JITTER", path + ".adapter.jitter_ppm", "jitter_ppm must be in [0, 500000)");
    }
    if (codec_ids.count(s.adapter.codec_id) == 0) {
      add("UNKNOWN_CODEC", path + ".adapter.codec_id",
          "codec " + std::to_string(s.adapter.codec_id) + " is neither built in nor declared");
    }

    bool kind_ok = false;
    switch (s.adapter.type) {
      case AdapterType::SimUs: kind_ok = d.kind == StreamKind::ImageRgb; break;
      case AdapterType::SimPose: kind_ok = d.kind == StreamKind::Pose; break;
      case AdapterType::SimRgbd:
        kind_ok = d.kind == StreamKind::ImageRgb || d.kind == StreamKind::ImageDepth;
        rgbd_groups[{d.source_hub, s.adapter.instance}].push_back(i);
        break;
    }
    if (!kind_ok) {
      add("BAD_ADAPTER", path + ".adapter.type",
          std::string(to_string(s.adapter.type)) + " cannot produce " +
              std::string(to_string(d.kind)));
    }
    if (d.kind == StreamKind::ImageRgb && static_cast<std::uint64_t>(d.width) * d.height * 3 < 16) {
      add("BAD_DIMENSIONS", path + ".width", "simulated images need at least 16 bytes");
    }
  }

  for (const auto& [key, members] : rgbd_groups) {
    auto path = stream_path(members.front()) + ".adapter.instance";
    if (members.size() != 2) {
      add("BAD_RGBD_PAIR", path,
          "SIM_RGBD instance '" + key.second + "' on hub '" + key.first +
              "' needs exactly one IMAGE_RGB and one IMAGE_DEPTH stream");
      continue;
    }
    const auto& a = cfg.streams[members[0]];
    const auto& b = cfg.streams[members[1]];
    bool kinds = (a.descriptor.kind != b.descriptor.kind);
    bool dims = a.descriptor.width == b.descriptor.width &&
                a.descriptor.height == b.descriptor.height;
    bool rate = a.effective_fps() == b.effective_fps();
    bool seed = a.adapter.seed == b.adapter.seed;
    bool jitter = a.adapter.jitter_ppm == b.adapter.jitter_ppm;
    if (!(kinds && dims && rate && seed && jitter)) {
      add("BAD_RGBD_PAIR", path,
          "SIM_RGBD pair must be one RGB and one DEPTH stream sharing size, rate, seed and "
          "jitter");
    }
  }
  return out;
}

json to_json(const StreamDescriptor& d) {
  return json{{"stream_id", d.stream_id},
              {"name", d.name},
              {"kind", to_string(d.kind)},
              {"width", d.width},
              {"height", d.height},
              {"pixel_format", to_string(d.pixel_format)},
              {"nominal_fps", d.nominal_fps},
              {"source_hub", d.source_hub},
              {"source_port_kind", to_string(d.source_port_kind)}};
}

json to_json(const StreamConfig& s) {
  json j = to_json(s.descriptor);
  json a{{"type", to_string(s.adapter.type)},
         {"seed", s.adapter.seed},
         {"codec_id", s.adapter.codec_id},
         {"jitter_ppm", s.adapter.jitter_ppm}};
  if (s.adapter.fps) a["fps"] = *s.adapter.fps;
  if (!s.adapter.instance.empty()) a["instance"] = s.adapter.instance;
  j["adapter"] = std::move(a);
  return j;
}

json to_json(const SessionConfig& cfg) {
  json hubs = json::array();
  for (const auto& h : cfg.hubs) hubs.push_back({{"hub_id", h.hub_id}, {"address", h.address}});
  json streams = json::array();
  for (const auto& s : cfg.streams) streams.push_back(to_json(s));
  json j{{"session_name", cfg.session_name},
         {"hubs", std::move(hubs)},
         {"streams", std::move(streams)},
         {"storage_dir", cfg.storage_dir},
         {"queue_capacity", cfg.queue_capacity},
         {"metrics_interval_ms", cfg.metrics_interval_ms}};
  if (!cfg.codecs.empty()) {
    json codecs = json::array();
    for (const auto& c : cfg.codecs) {
      codecs.push_back({{"codec_id", c.codec_id},
                        {"encoder", c.encoder},
                        {"decoder", c.decoder},
                        {"lossy", c.lossy}});
    }
    j["codecs"] = std::move(codecs);
  }
  return j;
}

json to_json(const Violation& v) {
  return json{{"code", v.code}, {"path", v.path}, {"message", v.message}};
}

json to_json(const std::vector<Violation>& vs) {
  json arr = json::array();
  for (const auto& v : vs) arr.push_back(to_json(v));
  return arr;
}

namespace {

// Field accessors record a violation and return nullopt on absence or
// mismatched type.
class FieldReader {
 public:
  FieldReader(const json& obj, std::vector<Violation>& out, std::string path)
      : obj_(obj), out_(out), path_(std::move(path)) {}

  bool is_object() {
    if (obj_.is_object()) return true;
    out_.push_back({"BAD_FIELD", path_, "expected an object"});
    return false;
  }

  std::optional<std::string> str(const char* key, bool required = true) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return missing(key, required);
    if (!it->is_string()) return bad(key, "a string");
    return it->get<std::string>();
  }

  std::optional<std::uint64_t> uint(const char* key, std::uint64_t max, bool required = true) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return missing_u(key, required);
    bool non_negative = it->is_number_unsigned() ||
                        (it->is_number_integer() && it->get<std::int64_t>() >= 0);
    if (!non_negative) {
      bad(key, "a non-negative integer");
      return std::nullopt;
    }
    auto v = it->get<std::uint64_t>();
    if (v > max) {
      bad(key, "an integer <= " + std::to_string(max));
      return std::nullopt;
    }
    return v;
  }

  std::optional<double> number(const char* key, bool required = true) {
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      if (required) out_.push_back({"MISSING_FIELD", field(key), "field is required"});
      return std::nullopt;
    }
    if (!it->is_number()) {
      bad(key, "a number");
      return std::nullopt;
    }
    return it->get<double>();
  }

  std::optional<bool> boolean(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return std::nullopt;
    if (!it->is_boolean()) {
      bad(key, "a boolean");
      return std::nullopt;
    }
    return it->get<bool>();
  }

  const json* array(const char* key, bool required = true) {
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      if (required) out_.push_back({"MISSING_FIELD", field(key), "field is required"});
      return nullptr;
    }
    if (!it->is_array()) {
      bad(key, "an array");
      return nullptr;
    }
    return &*it;
  }

  const json* object(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      out_.push_back({"MISSING_FIELD", field(key), "field is required"});
      return nullptr;
    }
    if (!it->is_object()) {
      bad(key, "an object");
      return nullptr;
    }
    return &*it;
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  std::vector<Violation>& out() { return out_; }

 private:
  std::optional<std::string> missing(const char* key, bool required) {
    if (required) out_.push_back({"MISSING_FIELD", field(key), "field is required"});
    return std::nullopt;
  }
  std::optional<std::uint64_t> missing_u(const char* key, bool required) {
    if (required) out_.push_back({"MISSING_FIELD", field(key), "field is required"});
    return std::nullopt;
  }
  std::optional<std::string> bad(const char* key, const std::string& expected) {
    out_.push_back({"BAD_FIELD", field(key), "expected " + expected});
    return std::nullopt;
  }

  const json& obj_;
  std::vector<Violation>& out_;
  std::string path_;
};

template <typename E>
std::optional<E> parse_enum(FieldReader& r, const char* key,
                            std::optional<E> (*parse)(std::string_view),
                            std::optional<E> fallback = std::nullopt) {
  auto s = r.str(key, !fallback.has_value());
  if (!s) return fallback;
  auto v = parse(*s);
  if (!v) r.out().push_back({"BAD_ENUM", r.field(key), "unknown value '" + *s + "'"});
  return v;
}

}  // namespace

std::optional<StreamDescriptor> parse_stream_descriptor(const json& j, std::vector<Violation>& out,
                                                        const std::string& path) {
  FieldReader r(j, out, path);
  if (!r.is_object()) return std::nullopt;
  auto before = out.size();
  StreamDescriptor d;
  auto id = r.uint("stream_id", 0xFFFFFFFFu);
  auto name = r.str("name", false);
  auto kind = parse_enum<StreamKind>(r, "kind", parse_stream_kind);
  auto width = r.uint("width", 0xFFFFFFFFu, false);
  auto height = r.uint("height", 0xFFFFFFFFu, false);
  auto fmt = parse_enum<PixelFormat>(r, "pixel_format", parse_pixel_format);
  auto fps = r.number("nominal_fps");
  auto hub = r.str("source_hub");
  auto port = parse_enum<PortKind>(r, "source_port_kind", parse_port_kind, PortKind::Virtual);
  if (out.size() != before) return std::nullopt;
  d.stream_id = static_cast<std::uint32_t>(*id);
  d.name = name.value_or("stream-" + std::to_string(d.stream_id));
  d.kind = *kind;
  d.width = static_cast<std::uint32_t>(width.value_or(0));
  d.height = static_cast<std::uint32_t>(height.value_or(0));
  d.pixel_format = *fmt;
  d.nominal_fps = *fps;
  d.source_hub = *hub;
  d.source_port_kind = *port;
  return d;
}

std::optional<StreamConfig> parse_stream_config(const json& j, std::vector<Violation>& out,
                                                const std::string& path) {
  auto before = out.size();
  auto desc = parse_stream_descriptor(j, out, path);
  if (!desc) return std::nullopt;
  FieldReader r(j, out, path);
  const json* adapter = r.object("adapter");
  if (!adapter) return std::nullopt;
  FieldReader a(*adapter, out, path + ".adapter");
  StreamConfig s;
  s.descriptor = *desc;
  auto type = parse_enum<AdapterType>(a, "type", parse_adapter_type);
  auto seed = a.uint("seed", ~std::uint64_t{0}, false);
  auto fps = a.number("fps", false);
  auto codec = a.uint("codec_id", 255, false);
  auto jitter = a.number("jitter_ppm", false);
  auto instance = a.str("instance", false);
  if (out.size() != before) return std::nullopt;
  s.adapter.type = *type;
  s.adapter.seed = seed.value_or(0);
  s.adapter.fps = fps;
  s.adapter.codec_id = static_cast<std::uint8_t>(codec.value_or(0));
  s.adapter.jitter_ppm = jitter.value_or(0.0);
  s.adapter.instance = instance.value_or("");
  return s;
}

ParsedConfig parse_session_config(const json& j) {
  ParsedConfig result;
  auto& out = result.violations;
  FieldReader r(j, out, "");
  if (!r.is_object()) return result;

  SessionConfig cfg;
  auto name = r.str("session_name");
  auto storage = r.str("storage_dir");
  auto capacity = r.uint("queue_capacity", 0xFFFFFFFFu, false);
  auto interval = r.uint("metrics_interval_ms", 0xFFFFFFFFu, false);

  if (const json* hubs = r.array("hubs")) {
    for (std::size_t i = 0; i < hubs->size(); ++i) {
      FieldReader h((*hubs)[i], out, "hubs[" + std::to_string(i) + "]");
      if (!h.is_object()) continue;
      auto id = h.str("hub_id");
      auto address = h.str("address", false);
      if (id) cfg.hubs.push_back({*id, address.value_or("")});
    }
  }
  if (const json* streams = r.array("streams")) {
    for (std::size_t i = 0; i < streams->size(); ++i) {
      if (auto s = parse_stream_config((*streams)[i], out, stream_path(i))) {
        cfg.streams.push_back(std::move(*s));
      }
    }
  }
  if (const json* codecs = r.array("codecs", false)) {
    for (std::size_t i = 0; i < codecs->size(); ++i) {
      FieldReader c((*codecs)[i], out, "codecs[" + std::to_string(i) + "]");
      if (!c.is_object()) continue;
      auto id = c.uint("codec_id", 255);
      auto enc = c.str("encoder");
      auto dec = c.str("decoder");
      auto lossy = c.boolean("lossy");
      if (id && enc && dec) {
        cfg.codecs.push_back({static_cast<std::uint8_t>(*id), *enc, *dec, lossy.value_or(false)});
      }
    }
  }

  if (!out.empty()) return result;
  cfg.session_name = *name;
  cfg.storage_dir = *storage;
  if (capacity) cfg.queue_capacity = static_cast<std::uint32_t>(*capacity);
  if (interval) cfg.metrics_interval_ms = static_cast<std::uint32_t>(*interval);
  result.config = std::move(cfg);
  return result;
}

SessionConfig reference_session(const std::string& hub_id, const std::string& storage_dir) {
  SessionConfig cfg;
  cfg.session_name = "spine-scan";
  cfg.hubs.push_back({hub_id, ""});
  cfg.storage_dir = storage_dir;

  StreamConfig us;
  us.descriptor = {1, "us", StreamKind::ImageRgb, 1920, 1080, PixelFormat::Rgb8, 60.0, hub_id,
                   PortKind::HdmiIn};
  us.adapter = {AdapterType::SimUs, 1, std::nullopt, 1, 0.0, ""};

  StreamConfig pose;
  pose.descriptor = {2, "pose", StreamKind::Pose, 0, 0, PixelFormat::None, 200.0, hub_id,
                     PortKind::Ethernet};
  pose.adapter = {AdapterType::SimPose, 2, std::nullopt, 0, 0.0, ""};

  StreamConfig rgb;
  rgb.descriptor = {3, "rgb", StreamKind::ImageRgb, 1280, 720, PixelFormat::Rgb8, 30.0, hub_id,
                    PortKind::UsbC};
  rgb.adapter = {AdapterType::SimRgbd, 3, std::nullopt, 1, 0.0, "d405"};

  StreamConfig depth;
  depth.descriptor = {4, "depth", StreamKind::ImageDepth, 1280, 720, PixelFormat::Depth16, 30.0,
                      hub_id, PortKind::UsbC};
  depth.adapter = {AdapterType::SimRgbd, 3, std::nullopt, 0, 0.0, "d405"};

  cfg.streams = {us, pose, rgb, depth};
  return cfg;
}

}  // namespace dhub
