// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// HTTP/1.1 front end of the supervisor:
//
//   GET  /api/hubs                registry, states and clock estimates
//   GET  /api/session             state, config, degraded flag
//   PUT  /api/session             apply a config (400 violations, 409 BAD_TRANSITION)
//   POST /api/session/start       409 HUBS_NOT_READY / BAD_TRANSITION
//   POST /api/session/stop
//   GET  /api/metrics             latest aggregated snapshot
//   GET  /api/recordings          recordings under the storage root
//   GET  /api/recordings/{name}   manifest (404 when unknown)
//   GET  /api/events              NDJSON event stream with heartbeats

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "dhub/supd/supervisor.hpp"

namespace dhub::supd {

class ApiServer {
 public:
  /// `static_dir`, when it exists, is served at `/`.
  explicit ApiServer(Supervisor& supervisor, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free one.
  /// Returns the bound port. Throws Error(IoError) when binding fails.
  int start(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::jthread thread_;
  int port_ = 0;
};

}  // namespace dhub::supd
