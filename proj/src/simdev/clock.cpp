// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/simdev/clock.hpp"

#include <chrono>

namespace dhub::simdev {

std::uint64_t SteadyClock::now_ns() const {
  auto raw = std::chrono::duration_cast<std::chrono::nanoseconds>(
                 std::chrono::steady_clock::now().time_since_epoch())
                 .count();
  return static_cast<std::uint64_t>(raw + offset_ns_);
}

bool SteadyClock::sleep_until(std::uint64_t deadline_ns, std::stop_token stop) {
  auto now = now_ns();
  if (now >= deadline_ns) return !stop.stop_requested();
  auto wake = std::chrono::steady_clock::now() + std::chrono::nanoseconds(deadline_ns - now);
  std::unique_lock lock(mu_);
  cv_.wait_until(lock, stop, wake, [] { return false; });
  return !stop.stop_requested();
}

std::uint64_t SimulatedClock::now_ns() const {
  std::lock_guard lock(mu_);
  return now_;
}

bool SimulatedClock::sleep_until(std::uint64_t deadline_ns, std::stop_token stop) {
  std::unique_lock lock(mu_);
  if (now_ >= deadline_ns) return !stop.stop_requested();
  auto it = sleepers_.insert(deadline_ns);
  cv_.notify_all();
  bool reached = cv_.wait(lock, stop, [&] { return now_ >= deadline_ns; });
  sleepers_.erase(it);
  cv_.notify_all();
  return reached && !stop.stop_requested();
}

void SimulatedClock::attach() {
  std::lock_guard lock(mu_);
  ++participants_;
}

void SimulatedClock::detach() {
  std::lock_guard lock(mu_);
  --participants_;
  cv_.notify_all();
}

bool SimulatedClock::settled() const {
  if (static_cast<int>(sleepers_.size()) < participants_) return false;
  return sleepers_.empty() || *sleepers_.begin() > now_;
}

void SimulatedClock::advance_to(std::uint64_t t_ns) {
  std::unique_lock lock(mu_);
  if (t_ns > now_) now_ = t_ns;
  cv_.notify_all();
  cv_.wait(lock, [&] { return settled(); });
}

void SimulatedClock::advance_by(std::uint64_t dt_ns) {
  std::uint64_t target;
  {
    std::lock_guard lock(mu_);
    target = now_ + dt_ns;
  }
  advance_to(target);
}

}  // namespace dhub::simdev
