// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "dhub/core/error.hpp"
#include "dhub/hubd/hub.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dhub hub daemon"};
  std::string hub_id = env_or("DHUB_HUB_ID", "");
  std::string supervisor = env_or("DHUB_SUPERVISOR", "");
  std::string config_path;
  std::string log_level = "info";
  std::int64_t clock_offset_ns = 0;
  bool no_data_connection = false;
  app.add_option("--hub-id", hub_id, "Hub identifier (env DHUB_HUB_ID)");
  app.add_option("--supervisor", supervisor, "Supervisor host:port (env DHUB_SUPERVISOR)");
  app.add_option("--config", config_path, "JSON file with hub_id, supervisor, clock_offset_ns, log_level");
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error");
  app.add_option("--clock-offset-ns", clock_offset_ns, "Shift the hub clock to emulate drift");
  app.add_flag("--no-data-connection", no_data_connection, "Send frames on the control connection");
  CLI11_PARSE(app, argc, argv);

  if (!config_path.empty()) {
    std::ifstream in(config_path);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (!in || j.is_discarded() || !j.is_object()) {
      std::cerr << "hubd: cannot read config " << config_path << "\n";
      return 2;
    }
    // Command-line flags win over the file.
    if (app.count("--hub-id") == 0 && j.contains("hub_id")) hub_id = j.value("hub_id", hub_id);
    if (app.count("--supervisor") == 0 && j.contains("supervisor")) supervisor = j.value("supervisor", supervisor);
    if (app.count("--log-level") == 0) log_level = j.value("log_level", log_level);
    if (app.count("--clock-offset-ns") == 0) clock_offset_ns = j.value("clock_offset_ns", clock_offset_ns);
    if (!no_data_connection) no_data_connection = !j.value("data_connection", true);
  }
  if (hub_id.empty() || supervisor.empty()) {
    std::cerr << "hubd: --hub-id and --supervisor are required\n";
    return 2;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  dhub::hubd::HubOptions options;
  options.hub_id = hub_id;
  try {
    options.supervisor = dhub::net::parse_endpoint(supervisor);
  } catch (const dhub::Error& e) {
    std::cerr << "hubd: " << e.what() << "\n";
    return 2;
  }
  options.clock_offset_ns = clock_offset_ns;
  options.data_connection = !no_data_connection;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);

  dhub::hubd::Hub hub(options);
  hub.start();
  spdlog::info("hub {} dialing {}", hub_id, supervisor);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  spdlog::info("hub {} shutting down", hub_id);
  hub.stop();
  return 0;
}
