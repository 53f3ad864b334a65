// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/supd/events.hpp"

#include "dhub/record/writer.hpp"

namespace dhub::supd {

using nlohmann::json;

std::optional<std::string> EventBus::Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return !lines_.empty() || closed_; });
  if (lines_.empty()) return std::nullopt;
  std::string line = std::move(lines_.front());
  lines_.pop_front();
  return line;
}

void EventBus::Subscription::push(const std::string& line) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    if (lines_.size() >= capacity_) {
      lines_.pop_front();
      ++overflowed_;
    }
    lines_.push_back(line);
  }
  cv_.notify_one();
}

void EventBus::Subscription::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventBus::Subscription::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::uint64_t EventBus::Subscription::overflowed() const {
  std::lock_guard lock(mu_);
  return overflowed_;
}

std::shared_ptr<EventBus::Subscription> EventBus::subscribe() {
  auto sub = std::make_shared<Subscription>(capacity_);
  std::lock_guard lock(mu_);
  subs_.push_back(sub);
  return sub;
}

json EventBus::publish(json event) {
  std::lock_guard lock(mu_);
  event["seq"] = next_seq_++;
  if (!event.contains("ts_ns")) event["ts_ns"] = record::wall_clock_ns();
  // Serialize under the lock so every reader sees the same order.
  std::string line = event.dump(-1, ' ', false, json::error_handler_t::replace);
  std::erase_if(subs_, [](const auto& w) { return w.expired(); });
  for (auto& w : subs_) {
    if (auto s = w.lock()) s->push(line);
  }
  return event;
}

void EventBus::close_all() {
  std::lock_guard lock(mu_);
  for (auto& w : subs_) {
    if (auto s = w.lock()) s->close();
  }
  subs_.clear();
}

std::size_t EventBus::subscribers() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& w : subs_) n += w.expired() ? 0 : 1;
  return n;
}

json heartbeat_event() { return {{"type", "heartbeat"}, {"ts_ns", record::wall_clock_ns()}}; }

EventStream::EventStream(std::shared_ptr<EventBus::Subscription> sub, std::chrono::milliseconds interval)
    : sub_(std::move(sub)), interval_(interval), last_heartbeat_(std::chrono::steady_clock::now()) {}

std::string EventStream::next_chunk() {
  std::string out;
  for (;;) {
    auto now = std::chrono::steady_clock::now();
    if (now - last_heartbeat_ >= interval_) {
      last_heartbeat_ = now;
      out += heartbeat_event().dump() + "\n";
    }
    auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(interval_ - (now - last_heartbeat_));
    auto line = sub_->next(std::max(wait, std::chrono::milliseconds(1)));
    if (line) {
      out += *line + "\n";
      // Pick up whatever else is already queued.
      while (auto more = sub_->next(std::chrono::milliseconds(0))) out += *more + "\n";
    }
    if (!out.empty()) return out;
    if (sub_->closed()) return {};
  }
}

}  // namespace dhub::supd
