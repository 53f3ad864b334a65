// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/cli/cli.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>

#include "dhub/core/config.hpp"
#include "dhub/core/error.hpp"
#include "dhub/record/catalog.hpp"
#include "dhub/record/reader.hpp"
#include "dhub/record/verify.hpp"

namespace dhub::cli {

using nlohmann::json;
namespace fs = std::filesystem;

CliEnv process_env() {
  CliEnv env;
  if (const char* v = std::getenv("DHUB_API")) env.api = v;
  if (const char* v = std::getenv("DHUB_STORAGE")) env.storage = v;
  return env;
}

std::string normalize_api_url(const std::string& api) {
  std::string url = api;
  if (url.find("://") == std::string::npos) url = "http://" + url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  return url;
}

namespace {

std::string one_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

std::string human_bytes(double bytes) {
  const char* units[] = {"B", "KB", "MB", "GB", "TB"};
  int u = 0;
  while (bytes >= 1000.0 && u < 4) {
    bytes /= 1000.0;
    ++u;
  }
  return u == 0 ? fmt::format("{:.0f} {}", bytes, units[u]) : fmt::format("{:.2f} {}", bytes, units[u]);
}

// Failure that maps straight onto an exit code.
struct CliFailure {
  int code;
  std::string message;
};

class Api {
 public:
  explicit Api(std::string url) : url_(normalize_api_url(url)), client_(url_) {
    client_.set_connection_timeout(3, 0);
    client_.set_read_timeout(30, 0);
  }

  json get(const std::string& path) { return check(client_.Get(path), "GET", path); }
  json put(const std::string& path, const json& body) {
    return check(client_.Put(path, one_line(body), "application/json"), "PUT", path);
  }
  json post(const std::string& path) { return check(client_.Post(path, "", "application/json"), "POST", path); }

  /// Streams NDJSON lines to `on_line` until it returns false.
  void stream(const std::string& path, const std::function<bool(const std::string&)>& on_line) {
    client_.set_read_timeout(10, 0);
    std::string pending;
    bool stopped = false;
    auto res = client_.Get(path, [&](const char* data, std::size_t len) {
      pending.append(data, len);
      std::size_t pos;
      while ((pos = pending.find('\n')) != std::string::npos) {
        std::string line = pending.substr(0, pos);
        pending.erase(0, pos + 1);
        if (!line.empty() && !on_line(line)) {
          stopped = true;
          return false;
        }
      }
      return true;
    });
    if (stopped) return;
    if (!res) unreachable(res.error());
    if (res->status != 200) throw CliFailure{kApiError, fmt::format("GET {} returned HTTP {}", path, res->status)};
    throw CliFailure{kApiError, "event stream closed by the supervisor"};
  }

  const std::string& url() const { return url_; }

 private:
  [[noreturn]] void unreachable(httplib::Error e) {
    throw CliFailure{kApiError, fmt::format("cannot reach the supervisor at {} ({}); is supd running? "
                                            "Point --api or DHUB_API at it.",
                                            url_, httplib::to_string(e))};
  }

  json check(const httplib::Result& res, const char* method, const std::string& path) {
    if (!res) unreachable(res.error());
    auto body = json::parse(res->body, nullptr, false);
    if (res->status >= 200 && res->status < 300) {
      if (body.is_discarded()) throw CliFailure{kApiError, fmt::format("{} {}: response is not JSON", method, path)};
      return body;
    }
    std::string code = body.is_object() ? body.value("code", "HTTP_" + std::to_string(res->status)) : "HTTP_ERROR";
    std::string message = body.is_object() ? body.value("message", "") : res->body;
    std::string text = fmt::format("{}: {}", code, message);
    if (body.is_object() && body.contains("violations")) {
      for (const auto& v : body["violations"]) {
        text += fmt::format("\n  {} at {}: {}", v.value("code", ""), v.value("path", ""), v.value("message", ""));
      }
    }
    throw CliFailure{kApiError, text};
  }

  std::string url_;
  httplib::Client client_;
};

// ---------------------------------------------------------------------------
// Session and hub commands

void print_session(std::ostream& out, const json& s) {
  out << fmt::format("session   {}\n", s.value("session_name", "").empty() ? "-" : s.value("session_name", ""));
  out << fmt::format("state     {}{}\n", s.value("state", "?"), s.value("degraded", false) ? " (degraded)" : "");
  if (s.contains("recording") && s["recording"].is_string()) {
    out << fmt::format("recording {}\n", s["recording"].get<std::string>());
  }
  if (s.contains("hubs_not_ready") && !s["hubs_not_ready"].empty()) {
    std::string list;
    for (const auto& h : s["hubs_not_ready"]) list += (list.empty() ? "" : ", ") + h.get<std::string>();
    out << fmt::format("not ready {}\n", list);
  }
  if (s.contains("last_error") && s["last_error"].is_string()) {
    out << fmt::format("error     {}\n", s["last_error"].get<std::string>());
  }
}

void print_hubs(std::ostream& out, const json& hubs) {
  out << fmt::format("{:<12} {:<10} {:<9} {:>11} {:>9} {:>7}\n", "HUB", "STATE", "CONNECTED", "OFFSET_MS",
                     "DISP_MS", "STREAMS");
  for (const auto& h : hubs) {
    std::string offset = "-", disp = "-";
    if (h.contains("clock") && h["clock"].is_object()) {
      offset = fmt::format("{:.3f}", h["clock"].value("offset_ns", 0.0) / 1e6);
      disp = fmt::format("{:.3f}", h["clock"].value("dispersion_ns", 0.0) / 1e6);
    }
    out << fmt::format("{:<12} {:<10} {:<9} {:>11} {:>9} {:>7}\n", h.value("hub_id", "?"),
                       h["state"].is_string() ? h["state"].get<std::string>() : "-",
                       h.value("connected", false) ? "yes" : "no", offset, disp,
                       h.contains("streams") ? h["streams"].size() : 0);
  }
}

int cmd_apply(Api& api, const std::string& file, bool as_json, std::ostream& out, std::ostream& err) {
  std::ifstream in(file);
  if (!in) {
    err << "error: cannot read " << file << "\n";
    return kUsage;
  }
  auto body = json::parse(in, nullptr, false);
  if (body.is_discarded()) {
    err << "error: " << file << " is not valid JSON\n";
    return kUsage;
  }
  // Catch mistakes locally so a bad file never reaches the supervisor.
  auto parsed = parse_session_config(body);
  auto violations = parsed.violations;
  if (parsed.config && violations.empty()) violations = validate_session_config(*parsed.config);
  if (!violations.empty()) {
    err << "error: " << file << " is not a valid session config:\n";
    for (const auto& v : violations) err << fmt::format("  {} at {}: {}\n", v.code, v.path, v.message);
    return kUsage;
  }
  auto s = api.put("/api/session", body);
  if (as_json) {
    out << one_line(s) << "\n";
  } else {
    print_session(out, s);
  }
  return kOk;
}

// Renders a per-stream table from the latest metrics of every hub.
class WatchTable {
 public:
  void update(const json& ev) {
    std::string hub = ev.value("hub_id", "?");
    const json& m = ev["metrics"];
    std::uint64_t ts = m.value("ts_ns", std::uint64_t{0});
    auto& h = hubs_[hub];
    h.state = m.value("state", "?");
    std::map<std::uint32_t, Row> rows;
    if (m.contains("streams")) {
      for (const auto& s : m["streams"]) {
        Row r;
        r.name = s.value("name", "");
        r.fps = s.value("fps_1s", 0.0);
        r.dropped = s.value("dropped", std::uint64_t{0});
        r.queue = s.value("queue_depth", std::uint64_t{0});
        r.bytes = s.value("bytes_encoded", std::uint64_t{0});
        auto id = s.value("stream_id", std::uint32_t{0});
        if (auto prev = h.rows.find(id); prev != h.rows.end() && ts > h.ts_ns && r.bytes >= prev->second.bytes) {
          r.mbps = static_cast<double>(r.bytes - prev->second.bytes) / 1e6 / (static_cast<double>(ts - h.ts_ns) / 1e9);
        }
        rows[id] = r;
      }
    }
    h.rows = std::move(rows);
    h.ts_ns = ts;
  }

  void render(std::ostream& out) const {
    out << fmt::format("{:<8} {:<10} {:>6} {:<10} {:>8} {:>9} {:>6} {:>9}\n", "HUB", "STATE", "STREAM", "NAME",
                       "FPS", "DROPPED", "QUEUE", "MB/s");
    for (const auto& [hub, h] : hubs_) {
      for (const auto& [id, r] : h.rows) {
        out << fmt::format("{:<8} {:<10} {:>6} {:<10} {:>8.1f} {:>9} {:>6} {:>9.1f}\n", hub, h.state, id, r.name,
                           r.fps, r.dropped, r.queue, r.mbps);
      }
    }
    out << "\n";
  }

 private:
  struct Row {
    std::string name;
    double fps = 0;
    std::uint64_t dropped = 0;
    std::uint64_t queue = 0;
    std::uint64_t bytes = 0;
    double mbps = 0;
  };
  struct Hub {
    std::string state;
    std::uint64_t ts_ns = 0;
    std::map<std::uint32_t, Row> rows;
  };
  std::map<std::string, Hub> hubs_;
};

int cmd_watch(Api& api, bool as_json, int count, std::ostream& out) {
  WatchTable table;
  int seen = 0;
  api.stream("/api/events", [&](const std::string& line) {
    auto ev = json::parse(line, nullptr, false);
    if (ev.is_discarded()) return true;
    std::string type = ev.value("type", "");
    if (type == "heartbeat") {
      if (as_json) out << line << "\n" << std::flush;
      return true;
    }
    if (as_json) {
      out << line << "\n" << std::flush;
    } else if (type == "metrics" && ev.contains("metrics") && ev["metrics"].is_object()) {
      table.update(ev);
      table.render(out);
      out << std::flush;
    } else if (type == "session_state") {
      out << fmt::format("session {} -> {}{}\n", ev.value("previous", "?"), ev.value("state", "?"),
                         ev.value("degraded", false) ? " (degraded)" : "")
          << std::flush;
    } else if (type == "hub_state") {
      out << fmt::format("hub {} {}\n", ev.value("hub_id", "?"),
                         ev["state"].is_string() ? ev["state"].get<std::string>() : "disconnected")
          << std::flush;
    } else if (type == "warning") {
      out << fmt::format("warning {}: {}\n", ev.value("code", "?"), ev.value("message", "")) << std::flush;
    }
    return count <= 0 || ++seen < count;
  });
  return kOk;
}

// ---------------------------------------------------------------------------
// Offline recording commands

fs::path locate(const fs::path& storage, const std::string& name) {
  auto dir = record::find_recording(storage, name);
  if (!dir) throw CliFailure{kApiError, fmt::format("no recording named '{}' under {}", name, storage.string())};
  return *dir;
}

int cmd_rec_ls(const fs::path& storage, bool as_json, std::ostream& out) {
  auto list = record::list_recordings(storage);
  if (as_json) {
    json arr = json::array();
    for (const auto& r : list) arr.push_back(record::to_json(r));
    out << one_line(arr) << "\n";
    return kOk;
  }
  out << fmt::format("{:<32} {:<9} {:>7} {:>10} {:>11}\n", "NAME", "STATE", "STREAMS", "FRAMES", "SIZE");
  for (const auto& r : list) {
    out << fmt::format("{:<32} {:<9} {:>7} {:>10} {:>11}\n", r.name, r.state + (r.repaired ? "*" : ""), r.streams,
                       r.total_frames, human_bytes(static_cast<double>(r.total_bytes)));
  }
  return kOk;
}

int cmd_rec_info(const fs::path& storage, const std::string& name, bool as_json, std::ostream& out) {
  auto dir = locate(storage, name);
  auto summary = record::summarize_recording(dir, name);
  if (summary.state != "complete") {
    if (as_json) {
      out << one_line(record::to_json(summary)) << "\n";
    } else {
      out << fmt::format("{}: {} recording of session '{}' ({} streams); run `dhub rec verify {} --repair`\n", name,
                         summary.state, summary.session_name, summary.streams, name);
    }
    return kOk;
  }
  auto rec = record::Recording::open(dir);
  const auto& m = rec.manifest();
  if (as_json) {
    out << one_line(record::to_json(m)) << "\n";
    return kOk;
  }
  out << fmt::format("session   {}\n", m.session_name);
  out << fmt::format("frames    {}\n", m.total_frames());
  out << fmt::format("size      {}\n", human_bytes(static_cast<double>(m.total_bytes())));
  if (m.degraded) out << "degraded  yes\n";
  if (m.repaired) out << "repaired  yes\n";
  for (const auto& [hub, est] : m.clock) {
    out << fmt::format("clock     hub {} offset {:.3f} ms, dispersion {:.3f} ms\n", hub, est.offset_ns / 1e6,
                       est.dispersion_ns / 1e6);
  }
  out << fmt::format("\n{:>6} {:<10} {:<12} {:<5} {:>8} {:>10} {:>9} {:>11} {:>6}\n", "STREAM", "NAME", "KIND",
                     "CODEC", "FRAMES", "DURATION_S", "MEAN_FPS", "SIZE", "DROPS");
  for (const auto& s : m.streams) {
    out << fmt::format("{:>6} {:<10} {:<12} {:<5} {:>8} {:>10.2f} {:>9.2f} {:>11} {:>6}\n", s.stream_id(),
                       s.config.descriptor.name, to_string(s.config.descriptor.kind),
                       codec::codec_name(s.config.adapter.codec_id), s.frame_count, s.duration_s(), s.mean_fps(),
                       human_bytes(static_cast<double>(s.byte_count)), s.drop_count);
  }
  return kOk;
}

int cmd_rec_verify(const fs::path& storage, const std::string& name, bool repair, bool payloads, bool as_json,
                   std::ostream& out, std::ostream& err) {
  auto dir = locate(storage, name);
  record::VerifyOptions options;
  options.check_payloads = payloads;
  auto report = record::verify_recording(dir, options);
  if (report.partial && repair) {
    try {
      auto result = record::repair_recording(dir);
      if (!as_json) {
        for (const auto& s : result.streams) {
          out << fmt::format("repaired stream {}: {} records kept, {} bytes discarded\n", s.stream_id, s.recovered,
                             s.discarded_bytes);
        }
      }
    } catch (const Error& e) {
      err << "error: repair failed: " << e.what() << "\n";
      return kApiError;
    }
    report = record::verify_recording(dir, options);
  }
  if (as_json) {
    out << one_line(record::to_json(report)) << "\n";
  } else {
    for (const auto& s : report.streams) {
      out << fmt::format("stream {:>3}: {} records, {} CRC failures, {} seq gaps, {} payloads checked", s.stream_id,
                         s.records, s.crc_failures, s.seq_gaps, s.payload_checked);
      if (s.max_pose_residual > 0) out << fmt::format(", pose residual {:.3g}", s.max_pose_residual);
      out << "\n";
    }
    for (const auto& f : report.findings) out << fmt::format("{} {}: {}\n", f.code, f.location, f.message);
    if (report.clean()) {
      out << "clean\n";
    } else if (report.partial) {
      out << fmt::format("recording is partial; rerun with --repair to salvage it\n");
    }
  }
  return report.clean() ? kOk : kFindings;
}

std::string csv_double(double v) { return fmt::format("{:.17g}", v); }

int cmd_rec_export(const fs::path& storage, const std::string& name, std::vector<std::uint32_t> streams,
                   const fs::path& out_dir, bool as_json, std::ostream& out) {
  auto dir = locate(storage, name);
  auto rec = record::Recording::open(dir);
  auto codecs = rec.codecs();
  if (streams.empty()) {
    for (const auto& s : rec.manifest().streams) streams.push_back(s.stream_id());
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw CliFailure{kApiError, fmt::format("cannot create {}: {}", out_dir.string(), ec.message())};

  std::ofstream index(out_dir / "index.csv");
  index << "stream_id,seq,capture_ts_ns,session_ts_ns,file\n";
  json summary = json::array();
  for (auto id : streams) {
    const auto& sm = rec.stream(id);
    auto entries = rec.index(id);
    std::string base = fmt::format("stream-{}-{}", id, sm.config.descriptor.name);
    std::uint64_t written = 0;
    if (sm.config.descriptor.kind == StreamKind::Pose) {
      std::string file = base + ".csv";
      std::ofstream csv(out_dir / file);
      csv << "seq,session_ts_ns,px,py,pz,qw,qx,qy,qz\n";
      for (const auto& e : entries) {
        auto frame = rec.read(id, e, codecs);
        auto pose = parse_pose(frame.payload);
        csv << frame.seq << ',' << frame.session_ts_ns;
        for (double v : pose.position) csv << ',' << csv_double(v);
        for (double v : pose.orientation) csv << ',' << csv_double(v);
        csv << '\n';
        index << id << ',' << frame.seq << ',' << frame.capture_ts_ns << ',' << frame.session_ts_ns << ',' << file
              << '\n';
        ++written;
      }
      if (!csv) throw CliFailure{kApiError, "cannot write " + (out_dir / file).string()};
    } else {
      fs::create_directories(out_dir / base, ec);
      for (const auto& e : entries) {
        auto frame = rec.read(id, e, codecs);
        std::string file = fmt::format("{}/{:08}.bin", base, frame.seq);
        std::ofstream bin(out_dir / file, std::ios::binary);
        bin.write(reinterpret_cast<const char*>(frame.payload.data()),
                  static_cast<std::streamsize>(frame.payload.size()));
        if (!bin) throw CliFailure{kApiError, "cannot write " + (out_dir / file).string()};
        index << id << ',' << frame.seq << ',' << frame.capture_ts_ns << ',' << frame.session_ts_ns << ',' << file
              << '\n';
        ++written;
      }
    }
    summary.push_back({{"stream_id", id}, {"name", sm.config.descriptor.name}, {"frames", written}});
    if (!as_json) {
      std::string target = sm.config.descriptor.kind == StreamKind::Pose ? base + ".csv" : base + "/";
      out << fmt::format("stream {} ({}): {} frames -> {}\n", id, sm.config.descriptor.name, written, target);
    }
  }
  if (!index) throw CliFailure{kApiError, "cannot write index.csv"};
  if (as_json) out << one_line({{"out", out_dir.string()}, {"streams", summary}}) << "\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliEnv& env) {
  CLI::App app{"dhub: control the recording supervisor and inspect recordings"};
  app.require_subcommand(1);
  std::string api_url = env.api.value_or(kDefaultApi);
  std::string storage = env.storage.value_or("recordings");
  bool as_json = false;
  app.add_option("--api", api_url, "Supervisor API URL (env DHUB_API)");
  app.add_option("--storage", storage, "Recordings root for `rec` commands (env DHUB_STORAGE)");
  app.add_flag("--json", as_json, "Print raw JSON, one document per line");

  auto* hubs = app.add_subcommand("hubs", "List connected hubs");

  auto* session = app.add_subcommand("session", "Configure, start and stop the session");
  session->require_subcommand(1);
  std::string config_file;
  auto* apply = session->add_subcommand("apply", "Apply a session config file");
  apply->add_option("-f,--file", config_file, "Session config JSON")->required();
  auto* start = session->add_subcommand("start", "Start recording");
  auto* stop = session->add_subcommand("stop", "Stop recording and finalize");
  auto* status = session->add_subcommand("status", "Show the session state");
  std::string template_hub = "A";
  auto* tmpl = session->add_subcommand("template", "Print the three-sensor reference config");
  tmpl->add_option("--hub", template_hub, "Hub id for every stream");

  int count = 0;
  auto* watch = app.add_subcommand("watch", "Follow live metrics and events");
  watch->add_option("-n,--count", count, "Exit after this many events");

  auto* rec = app.add_subcommand("rec", "Inspect recordings on disk");
  rec->require_subcommand(1);
  std::string name;
  auto* ls = rec->add_subcommand("ls", "List recordings");
  auto* info = rec->add_subcommand("info", "Per-stream summary of a recording");
  info->add_option("name", name, "Recording name or path")->required();
  bool repair = false;
  bool no_payloads = false;
  auto* verify = rec->add_subcommand("verify", "Re-check every record");
  verify->add_option("name", name, "Recording name or path")->required();
  verify->add_flag("--repair", repair, "Salvage a partial recording first");
  verify->add_flag("--no-payloads", no_payloads, "Skip decoding and generator comparison");
  std::vector<std::uint32_t> export_streams;
  std::string out_dir;
  auto* exp = rec->add_subcommand("export", "Write decoded frames as files");
  exp->add_option("name", name, "Recording name or path")->required();
  exp->add_option("--stream", export_streams, "Stream id (repeatable; default all)");
  exp->add_option("--out", out_dir, "Output directory")->required();

  std::vector<const char*> argv{"dhub"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*hubs) {
      Api api(api_url);
      auto j = api.get("/api/hubs");
      if (as_json) {
        out << one_line(j) << "\n";
      } else {
        print_hubs(out, j);
      }
      return kOk;
    }
    if (*session) {
      if (*tmpl) {
        out << to_json(reference_session(template_hub)).dump(2) << "\n";
        return kOk;
      }
      Api api(api_url);
      if (*apply) return cmd_apply(api, config_file, as_json, out, err);
      json j;
      if (*start) j = api.post("/api/session/start");
      if (*stop) j = api.post("/api/session/stop");
      if (*status) j = api.get("/api/session");
      if (as_json) {
        out << one_line(j) << "\n";
      } else {
        print_session(out, j);
      }
      return kOk;
    }
    if (*watch) {
      Api api(api_url);
      return cmd_watch(api, as_json, count, out);
    }
    if (*rec) {
      fs::path root(storage);
      if (*ls) return cmd_rec_ls(root, as_json, out);
      if (*info) return cmd_rec_info(root, name, as_json, out);
      if (*verify) return cmd_rec_verify(root, name, repair, !no_payloads, as_json, out, err);
      if (*exp) return cmd_rec_export(root, name, export_streams, out_dir, as_json, out);
    }
  } catch (const CliFailure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kApiError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kApiError;
  }
  return kUsage;
}

}  // namespace dhub::cli
