// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/supd/api.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "dhub/core/error.hpp"

namespace dhub::supd {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
}

void send_result(httplib::Response& res, const ApiResult& r) { send_json(res, r.status, r.body); }

}  // namespace

struct ApiServer::Impl {
  Supervisor& sup;
  httplib::Server server;

  explicit Impl(Supervisor& s) : sup(s) {}
};

ApiServer::ApiServer(Supervisor& supervisor, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(supervisor)) {
  auto& svr = impl_->server;
  Supervisor& sup = supervisor;
  // Event streams hold a worker each, so allow plenty.
  svr.new_task_queue = [] { return new httplib::ThreadPool(32); };

  svr.Get("/api/hubs", [&sup](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, sup.hubs_json());
  });
  svr.Get("/api/session", [&sup](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, sup.session_json());
  });
  svr.Put("/api/session", [&sup](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      send_json(res, 400, {{"code", "BAD_JSON"}, {"message", "request body is not valid JSON"}});
      return;
    }
    send_result(res, sup.apply(body));
  });
  svr.Post("/api/session/start", [&sup](const httplib::Request&, httplib::Response& res) {
    send_result(res, sup.start_session());
  });
  svr.Post("/api/session/stop", [&sup](const httplib::Request&, httplib::Response& res) {
    send_result(res, sup.stop_session());
  });
  svr.Get("/api/metrics", [&sup](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, sup.metrics_json());
  });
  svr.Get("/api/recordings", [&sup](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, sup.recordings_json());
  });
  svr.Get(R"(/api/recordings/(.+))", [&sup](const httplib::Request& req, httplib::Response& res) {
    send_result(res, sup.recording_json(req.matches[1]));
  });
  svr.Get("/api/events", [&sup](const httplib::Request&, httplib::Response& res) {
    auto stream = std::make_shared<EventStream>(sup.events().subscribe());
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("application/x-ndjson", [stream](std::size_t, httplib::DataSink& sink) {
      std::string chunk = stream->next_chunk();
      if (chunk.empty() || !sink.is_writable()) {
        sink.done();
        return false;
      }
      return sink.write(chunk.data(), chunk.size());
    });
  });
  svr.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (req.path.rfind("/api/", 0) == 0 && res.body.empty()) {
      send_json(res, res.status, {{"code", res.status == 404 ? "NOT_FOUND" : "HTTP_ERROR"},
                                  {"message", req.method + " " + req.path}});
    }
  });
  if (static_dir && std::filesystem::is_directory(*static_dir)) {
    svr.set_mount_point("/", static_dir->string());
  }
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
  auto& svr = impl_->server;
  if (port == 0) {
    port_ = svr.bind_to_any_port(host);
    if (port_ < 0) throw Error(Errc::IoError, "cannot bind API on " + host);
  } else {
    if (!svr.bind_to_port(host, port)) throw Error(Errc::IoError, "cannot bind API on " + host + ":" + std::to_string(port));
    port_ = port;
  }
  thread_ = std::jthread([this] { impl_->server.listen_after_bind(); });
  spdlog::info("API listening on http://{}:{}", host, port_);
  return port_;
}

void ApiServer::stop() {
  if (!thread_.joinable()) return;
  // Finish open event streams so their workers return.
  impl_->sup.events().close_all();
  impl_->server.stop();
  thread_.join();
}

}  // namespace dhub::supd
