// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhub/clocksync/clocksync.hpp"
#include "dhub/codec/registry.hpp"
#include "dhub/hubd/control.hpp"
#include "dhub/net/tcp.hpp"
#include "dhub/simdev/adapter.hpp"
#include "dhub/simdev/clock.hpp"

namespace dhub::hubd {

struct HubOptions {
  std::string hub_id;
  net::Endpoint supervisor;
  /// Frames travel on a second connection so control and clock-sync
  /// traffic never queues behind image data.
  bool data_connection = true;
  std::chrono::milliseconds backoff_min{500};
  std::chrono::milliseconds backoff_max{8000};
  std::chrono::milliseconds sync_interval{5000};
  std::size_t sync_burst = clocksync::kDefaultWindow;
  std::chrono::milliseconds sync_spacing{5};
  /// How long STOP waits for queued frames to be published.
  std::chrono::milliseconds stop_drain{2000};
  /// Hub clock; a SteadyClock shifted by clock_offset_ns when null.
  simdev::Clock* clock = nullptr;
  std::int64_t clock_offset_ns = 0;
};

/// Reconnect delay after `failures` consecutive failed attempts: doubles
/// from `min` and saturates at `max`.
std::chrono::milliseconds backoff_delay(std::size_t failures, std::chrono::milliseconds min,
                                        std::chrono::milliseconds max);

/// The hub daemon: dials the supervisor, obeys control commands, runs the
/// configured adapters and publishes their frames.
class Hub {
 public:
  explicit Hub(HubOptions options);
  ~Hub();

  Hub(const Hub&) = delete;
  Hub& operator=(const Hub&) = delete;

  /// Starts the connection manager; returns immediately.
  void start();
  /// Stops adapters, says BYE and joins every thread.
  void stop();

  HubState state() const;
  bool connected() const;
  std::optional<clocksync::OffsetEstimate> clock_estimate() const;
  nlohmann::json metrics_json() const;

  /// Runs one control request as if it came from the supervisor.
  ControlReply control(const ControlRequest& request);

  /// True when no frame is queued or being published.
  bool idle() const;

  const HubOptions& options() const { return options_; }

 private:
  struct Stream;

  void run_connection(std::stop_token stop);
  void run_ticker(std::stop_token stop);
  void run_publisher(Stream& stream, std::stop_token stop);
  void handle(const wire::Message& msg, net::Connection& control);
  void send_sync_burst(std::stop_token stop);
  void send_metrics();
  nlohmann::json hello_json(const std::string& role) const;

  void build_streams(const HubSetup& setup);
  void start_streaming();
  void stop_streaming();
  void teardown();

  std::shared_ptr<net::Connection> control_connection() const;
  std::shared_ptr<net::Connection> wait_data_connection(std::stop_token stop);

  HubOptions options_;
  std::unique_ptr<simdev::Clock> owned_clock_;
  simdev::Clock* clock_;
  clocksync::ClockTracker tracker_;

  mutable std::mutex control_mu_;
  HubControlState control_state_;
  std::vector<std::unique_ptr<Stream>> streams_;
  std::vector<simdev::AdapterHandle> adapters_;
  std::unique_ptr<codec::CodecRegistry> codecs_;

  mutable std::mutex conn_mu_;
  std::condition_variable_any conn_cv_;
  std::shared_ptr<net::Connection> control_;
  std::shared_ptr<net::Connection> data_;

  std::atomic<bool> sync_requested_{false};
  std::atomic<bool> metrics_requested_{false};
  std::atomic<std::uint32_t> metrics_interval_ms_{500};
  std::jthread connection_thread_;
  std::jthread ticker_thread_;
  bool started_ = false;
};

}  // namespace dhub::hubd
