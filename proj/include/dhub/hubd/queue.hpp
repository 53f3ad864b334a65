// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>

#include "dhub/core/types.hpp"

namespace dhub::hubd {

/// Bounded frame queue that evicts the oldest frame when full.
class FrameQueue {
 public:
  explicit FrameQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  /// Enqueues a frame; returns true when an older frame was evicted.
  bool push(Frame frame) {
    bool evicted = false;
    {
      std::lock_guard lock(mu_);
      if (closed_) return false;
      ++pushed_;
      if (frames_.size() >= capacity_) {
        frames_.pop_front();
        ++dropped_;
        evicted = true;
      }
      frames_.push_back(std::move(frame));
    }
    cv_.notify_one();
    return evicted;
  }

  /// Puts back a frame that was popped but not delivered. It is the oldest
  /// frame, so a full queue drops it instead. Returns false when dropped.
  bool requeue(Frame frame) {
    {
      std::lock_guard lock(mu_);
      if (closed_ || frames_.size() >= capacity_) {
        ++dropped_;
        return false;
      }
      frames_.push_front(std::move(frame));
    }
    cv_.notify_one();
    return true;
  }

  /// Waits up to `timeout` for a frame. Every frame returned counts as
  /// outstanding until the consumer calls done().
  std::optional<Frame> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, timeout, [&] { return !frames_.empty() || closed_; })) return std::nullopt;
    if (frames_.empty()) return std::nullopt;
    Frame f = std::move(frames_.front());
    frames_.pop_front();
    ++outstanding_;
    return f;
  }

  /// Marks one popped frame as handled (delivered, requeued or lost).
  void done() {
    {
      std::lock_guard lock(mu_);
      if (outstanding_ > 0) --outstanding_;
    }
    cv_.notify_all();
  }

  std::optional<Frame> try_pop() { return pop(std::chrono::milliseconds(0)); }

  /// Wakes waiting consumers; later pushes are ignored.
  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  /// Waits until no frame is queued or outstanding; false on timeout.
  bool wait_idle(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return frames_.empty() && outstanding_ == 0; });
  }

  /// True while a frame is queued or popped but not yet done().
  bool busy() const {
    std::lock_guard lock(mu_);
    return !frames_.empty() || outstanding_ > 0;
  }

  std::size_t depth() const {
    std::lock_guard lock(mu_);
    return frames_.size();
  }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t pushed() const {
    std::lock_guard lock(mu_);
    return pushed_;
  }
  std::uint64_t dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
  }

 private:
  const std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Frame> frames_;
  std::uint64_t pushed_ = 0;
  std::uint64_t dropped_ = 0;
  std::size_t outstanding_ = 0;
  bool closed_ = false;
};

}  // namespace dhub::hubd
