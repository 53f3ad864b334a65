// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "dhub/core/error.hpp"
#include "dhub/supd/api.hpp"
#include "dhub/supd/supervisor.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dhub supervisor daemon"};
  std::string listen = "0.0.0.0:7401";
  std::string api = "127.0.0.1:8080";
  std::string storage = "recordings";
  std::string ui_dir;
  std::string log_level = "info";
  app.add_option("--listen", listen, "Endpoint hubs dial (host:port)")->capture_default_str();
  app.add_option("--api", api, "HTTP API endpoint (host:port)")->capture_default_str();
  app.add_option("--storage", storage, "Root directory for recordings")->capture_default_str();
  app.add_option("--ui", ui_dir, "Static UI assets served at / (default: <exe dir>/ui when present)");
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);

  try {
    dhub::supd::SupervisorOptions options;
    options.listen = dhub::net::parse_endpoint(listen);
    options.storage = storage;
    auto api_ep = dhub::net::parse_endpoint(api);

    std::filesystem::path ui = ui_dir;
    if (ui.empty()) {
      std::error_code ec;
      auto exe = std::filesystem::read_symlink("/proc/self/exe", ec);
      if (!ec) ui = exe.parent_path() / "ui";
    }

    dhub::supd::Supervisor supervisor(options);
    supervisor.start();
    dhub::supd::ApiServer server(supervisor, ui);
    server.start(api_ep.host, api_ep.port);

    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    spdlog::info("supervisor shutting down");
    server.stop();
    supervisor.stop();
  } catch (const dhub::Error& e) {
    std::cerr << "supd: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
