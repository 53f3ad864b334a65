// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// A minimal supervisor speaking the hub protocol over real sockets. It
// records everything a hub sends and answers clock sync requests.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhub/net/tcp.hpp"
#include "dhub/wire/message.hpp"

namespace dhub::test {

class MockSupervisor {
 public:
  /// `offset_ns` is added to the local steady clock when answering sync.
  explicit MockSupervisor(std::int64_t offset_ns = 0)
      : offset_ns_(offset_ns) {
    listener_ = std::make_unique<net::Listener>(net::Endpoint{"127.0.0.1", 0});
    port_ = listener_->port();
    accept_ = std::jthread([this](std::stop_token st) { accept_loop(st); });
  }

  ~MockSupervisor() {
    go_down();
    std::lock_guard lock(threads_mu_);
    threads_.clear();
  }

  std::uint16_t port() const { return port_; }

  /// Simulates the supervisor process going away: the port stops
  /// listening and every open connection is cut.
  void go_down() {
    listener_->close();
    accept_.request_stop();
    if (accept_.joinable()) accept_.join();
    drop_connections();
  }

  /// Listens again on the same port.
  void come_up() {
    listener_ = std::make_unique<net::Listener>(net::Endpoint{"127.0.0.1", port_});
    accept_ = std::jthread([this](std::stop_token st) { accept_loop(st); });
  }

  void drop_connections() {
    std::lock_guard lock(mu_);
    for (auto& c : conns_) c->shutdown();
    control_.reset();
  }

  bool wait_connected(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return control_ != nullptr; });
  }

  bool send(const wire::Message& msg) {
    std::shared_ptr<net::Connection> c;
    {
      std::lock_guard lock(mu_);
      c = control_;
    }
    return c && c->send(msg);
  }

  struct Reply {
    bool ok;
    nlohmann::json body;
  };

  /// Sends a CONTROL body and waits for the matching ACK or ERROR.
  std::optional<Reply> control(nlohmann::json body, std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
    std::uint64_t id = next_id_++;
    body["request_id"] = id;
    if (!send(wire::Control{body})) return std::nullopt;
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, timeout, [&] { return replies_.count(id) != 0; })) return std::nullopt;
    return replies_[id];
  }

  /// Waits for a METRICS message that arrives after this call.
  std::optional<nlohmann::json> next_metrics(std::chrono::milliseconds timeout = std::chrono::seconds(5)) {
    std::unique_lock lock(mu_);
    std::size_t have = metrics_.size();
    if (!cv_.wait_for(lock, timeout, [&] { return metrics_.size() > have; })) return std::nullopt;
    return metrics_.back();
  }

  std::vector<Frame> frames() const {
    std::lock_guard lock(mu_);
    return frames_;
  }
  std::vector<nlohmann::json> hellos() const {
    std::lock_guard lock(mu_);
    return hellos_;
  }
  bool wait_pong(std::uint64_t nonce, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout,
                        [&] { return std::find(pongs_.begin(), pongs_.end(), nonce) != pongs_.end(); });
  }
  std::size_t sync_requests() const { return sync_requests_; }
  std::size_t connections() const { return connections_; }

 private:
  void accept_loop(std::stop_token st) {
    while (!st.stop_requested()) {
      auto sock = listener_->accept();
      if (!sock) return;
      auto conn = std::make_shared<net::Connection>(std::move(*sock));
      {
        std::lock_guard lock(mu_);
        conns_.push_back(conn);
      }
      ++connections_;
      std::lock_guard lock(threads_mu_);
      threads_.emplace_back([this, conn] { serve(conn); });
    }
  }

  void serve(std::shared_ptr<net::Connection> conn) {
    bool is_control = false;
    for (;;) {
      auto r = conn->receive();
      if (r.status != net::Connection::ReadStatus::Ok) break;
      auto& msg = *r.message;
      auto now = [&] {
        auto raw = std::chrono::duration_cast<std::chrono::nanoseconds>(
                       std::chrono::steady_clock::now().time_since_epoch())
                       .count();
        return static_cast<std::uint64_t>(raw + offset_ns_);
      };
      std::unique_lock lock(mu_);
      if (auto* h = std::get_if<wire::Hello>(&msg)) {
        hellos_.push_back(h->body);
        if (h->body.value("role", "control") != "data") {
          is_control = true;
          control_ = conn;
        }
      } else if (auto* req = std::get_if<wire::TimesyncReq>(&msg)) {
        ++sync_requests_;
        lock.unlock();
        std::uint64_t t2 = now();
        conn->send(wire::TimesyncResp{req->t1, t2, now()});
        continue;
      } else if (auto* m = std::get_if<wire::Metrics>(&msg)) {
        metrics_.push_back(m->body);
      } else if (auto* a = std::get_if<wire::ControlAck>(&msg)) {
        replies_[a->body.value("request_id", std::uint64_t{0})] = {true, a->body};
      } else if (auto* e = std::get_if<wire::ErrorReply>(&msg)) {
        replies_[e->body.value("request_id", std::uint64_t{0})] = {false, e->body};
      } else if (auto* pong = std::get_if<wire::Pong>(&msg)) {
        pongs_.push_back(pong->nonce);
      } else if (auto* f = std::get_if<wire::FrameMessage>(&msg)) {
        frames_.push_back(std::move(f->frame));
      }
      cv_.notify_all();
    }
    std::lock_guard lock(mu_);
    if (is_control && control_ == conn) control_.reset();
  }

  std::int64_t offset_ns_;
  std::unique_ptr<net::Listener> listener_;
  std::uint16_t port_ = 0;
  std::atomic<std::uint64_t> next_id_{1};
  std::atomic<std::size_t> sync_requests_{0};
  std::atomic<std::size_t> connections_{0};

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::shared_ptr<net::Connection> control_;
  std::vector<std::shared_ptr<net::Connection>> conns_;
  std::vector<nlohmann::json> hellos_;
  std::vector<nlohmann::json> metrics_;
  std::map<std::uint64_t, Reply> replies_;
  std::vector<Frame> frames_;
  std::vector<std::uint64_t> pongs_;

  std::mutex threads_mu_;
  std::list<std::jthread> threads_;
  std::jthread accept_;
};

}  // namespace dhub::test
