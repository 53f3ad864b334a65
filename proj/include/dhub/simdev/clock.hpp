// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <set>
#include <stop_token>

namespace dhub::simdev {

/// Monotonic time source that tick loops sleep on.
class Clock {
 public:
  virtual ~Clock() = default;

  virtual std::uint64_t now_ns() const = 0;

  /// Blocks until now_ns() >= deadline_ns or a stop is requested; returns
  /// false in the latter case.
  virtual bool sleep_until(std::uint64_t deadline_ns, std::stop_token stop) = 0;

  // Tick loops bracket their lifetime with these so a simulated clock can
  // tell when every loop has caught up.
  virtual void attach() {}
  virtual void detach() {}
};

/// std::chrono::steady_clock, optionally displaced by a fixed offset to
/// emulate a hub whose clock disagrees with the supervisor's.
class SteadyClock final : public Clock {
 public:
  explicit SteadyClock(std::int64_t offset_ns = 0) : offset_ns_(offset_ns) {}

  std::uint64_t now_ns() const override;
  bool sleep_until(std::uint64_t deadline_ns, std::stop_token stop) override;

 private:
  std::int64_t offset_ns_;
  std::mutex mu_;
  std::condition_variable_any cv_;
};

/// Manually advanced clock. advance_to() returns only once every attached
/// loop is asleep on a deadline in the future, which makes frame counts
/// exact in tests.
class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(std::uint64_t start_ns = 0) : now_(start_ns) {}

  std::uint64_t now_ns() const override;
  bool sleep_until(std::uint64_t deadline_ns, std::stop_token stop) override;
  void attach() override;
  void detach() override;

  void advance_to(std::uint64_t t_ns);
  void advance_by(std::uint64_t dt_ns);

 private:
  bool settled() const;

  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  std::uint64_t now_;
  int participants_ = 0;
  std::multiset<std::uint64_t> sleepers_;
};

}  // namespace dhub::simdev
