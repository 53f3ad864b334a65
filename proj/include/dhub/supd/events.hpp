// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dhub::supd {

inline constexpr std::chrono::milliseconds kHeartbeatInterval{2000};

/// Fan-out of supervisor events to any number of NDJSON readers. Every
/// published event gets a global, gap-free `seq`, so readers see one
/// total order.
class EventBus {
 public:
  class Subscription {
   public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    /// Next serialized line (without the newline), or nullopt after
    /// `timeout` or once closed.
    std::optional<std::string> next(std::chrono::milliseconds timeout);
    void close();
    bool closed() const;
    /// Lines discarded because this reader fell behind.
    std::uint64_t overflowed() const;

   private:
    friend class EventBus;
    void push(const std::string& line);

    const std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::string> lines_;
    std::uint64_t overflowed_ = 0;
    bool closed_ = false;
  };

  explicit EventBus(std::size_t per_reader_capacity = 4096) : capacity_(per_reader_capacity) {}

  std::shared_ptr<Subscription> subscribe();
  /// Stamps `seq` and `ts_ns` (wall clock) and delivers to every live reader;
  /// returns the stamped event.
  nlohmann::json publish(nlohmann::json event);
  /// Closes every subscription.
  void close_all();
  std::size_t subscribers() const;

 private:
  const std::size_t capacity_;
  mutable std::mutex mu_;
  std::uint64_t next_seq_ = 1;
  std::vector<std::weak_ptr<Subscription>> subs_;
};

/// Produces NDJSON for one reader: queued events as they arrive plus a
/// heartbeat line whenever `interval` passes since the previous heartbeat.
class EventStream {
 public:
  EventStream(std::shared_ptr<EventBus::Subscription> sub,
              std::chrono::milliseconds interval = kHeartbeatInterval);

  /// Blocks until at least one line is ready; returns newline-terminated
  /// text, or an empty string once the subscription is closed.
  std::string next_chunk();

 private:
  std::shared_ptr<EventBus::Subscription> sub_;
  std::chrono::milliseconds interval_;
  std::chrono::steady_clock::time_point last_heartbeat_;
};

nlohmann::json heartbeat_event();

}  // namespace dhub::supd
