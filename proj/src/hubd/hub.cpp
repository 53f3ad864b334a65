// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/hubd/hub.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <deque>
#include <utility>

#include "dhub/codec/drle.hpp"
#include "dhub/core/error.hpp"
#include "dhub/core/rate.hpp"
#include "dhub/hubd/queue.hpp"

namespace dhub::hubd {

using nlohmann::json;
using namespace std::chrono_literals;

std::chrono::milliseconds backoff_delay(std::size_t failures, std::chrono::milliseconds min,
                                        std::chrono::milliseconds max) {
  auto delay = min;
  for (std::size_t i = 0; i < failures && delay < max; ++i) delay *= 2;
  return std::min(delay, max);
}

namespace {

constexpr std::uint64_t kRateWindowNs = 1'000'000'000;

// Sleeps for `d` unless a stop is requested first.
void nap(std::stop_token stop, std::chrono::milliseconds d) {
  std::mutex mu;
  std::condition_variable_any cv;
  std::unique_lock lock(mu);
  cv.wait_for(lock, stop, d, [] { return false; });
}

}  // namespace

struct Hub::Stream {
  Stream(StreamConfig c, std::size_t capacity) : config(std::move(c)), queue(capacity) {}

  StreamConfig config;
  FrameQueue queue;
  std::atomic<std::uint64_t> published{0};
  std::atomic<std::uint64_t> bytes_encoded{0};
  /// Frames lost after leaving the queue (send or encode failure).
  std::atomic<std::uint64_t> lost{0};
  mutable std::mutex rate_mu;
  std::deque<std::uint64_t> recent_captures;
  std::jthread publisher;

  std::uint32_t id() const { return config.descriptor.stream_id; }

  void note_capture(std::uint64_t ts) {
    std::lock_guard lock(rate_mu);
    recent_captures.push_back(ts);
    while (!recent_captures.empty() && recent_captures.front() + 2 * kRateWindowNs < ts) {
      recent_captures.pop_front();
    }
  }

  double fps_1s(std::uint64_t now) const {
    std::lock_guard lock(rate_mu);
    std::vector<std::uint64_t> ts(recent_captures.begin(), recent_captures.end());
    return mean_fps(ts, static_cast<std::int64_t>(kRateWindowNs), now);
  }
};

Hub::Hub(HubOptions options) : options_(std::move(options)) {
  if (options_.clock == nullptr) {
    owned_clock_ = std::make_unique<simdev::SteadyClock>(options_.clock_offset_ns);
    clock_ = owned_clock_.get();
  } else {
    clock_ = options_.clock;
  }
  control_state_.hub_id = options_.hub_id;
}

Hub::~Hub() { stop(); }

void Hub::start() {
  if (started_) return;
  started_ = true;
  connection_thread_ = std::jthread([this](std::stop_token st) { run_connection(st); });
  ticker_thread_ = std::jthread([this](std::stop_token st) { run_ticker(st); });
}

void Hub::stop() {
  if (started_) {
    started_ = false;
    ticker_thread_.request_stop();
    connection_thread_.request_stop();
    if (auto c = control_connection()) {
      c->send(wire::Bye{});
      c->shutdown();
    }
    {
      std::lock_guard lock(conn_mu_);
      if (data_) data_->shutdown();
    }
    conn_cv_.notify_all();
    if (ticker_thread_.joinable()) ticker_thread_.join();
    if (connection_thread_.joinable()) connection_thread_.join();
  }
  std::lock_guard lock(control_mu_);
  teardown();
}

HubState Hub::state() const {
  std::lock_guard lock(control_mu_);
  return control_state_.state;
}

bool Hub::connected() const {
  std::lock_guard lock(conn_mu_);
  return control_ != nullptr;
}

std::optional<clocksync::OffsetEstimate> Hub::clock_estimate() const { return tracker_.current(); }

std::shared_ptr<net::Connection> Hub::control_connection() const {
  std::lock_guard lock(conn_mu_);
  return control_;
}

std::shared_ptr<net::Connection> Hub::wait_data_connection(std::stop_token stop) {
  std::unique_lock lock(conn_mu_);
  conn_cv_.wait_for(lock, stop, 100ms, [&] { return data_ != nullptr; });
  return data_;
}

json Hub::hello_json(const std::string& role) const {
  json streams = json::array();
  std::string session;
  HubState state;
  {
    std::lock_guard lock(control_mu_);
    state = control_state_.state;
    if (control_state_.setup) {
      session = control_state_.setup->session_name;
      for (const auto& s : control_state_.setup->streams) streams.push_back(s.descriptor.stream_id);
    }
  }
  return {{"hub_id", options_.hub_id},
          {"role", role},
          {"version", 1},
          {"state", std::string(to_string(state))},
          {"session_name", session},
          {"streams", std::move(streams)},
          {"capabilities",
           {{"adapters", {"SIM_US", "SIM_POSE", "SIM_RGBD"}}, {"codecs", {codec::kRaw, codec::kDrle}}}}};
}

void Hub::run_connection(std::stop_token stop) {
  std::size_t failures = 0;
  while (!stop.stop_requested()) {
    std::shared_ptr<net::Connection> control;
    std::shared_ptr<net::Connection> data;
    try {
      control = std::make_shared<net::Connection>(net::connect_tcp(options_.supervisor, 2000ms));
      if (!control->send(wire::Hello{hello_json("control")})) throw Error(Errc::Disconnected, "HELLO failed");
      if (options_.data_connection) {
        data = std::make_shared<net::Connection>(net::connect_tcp(options_.supervisor, 2000ms));
        if (!data->send(wire::Hello{hello_json("data")})) throw Error(Errc::Disconnected, "HELLO failed");
      } else {
        data = control;
      }
      {
        std::lock_guard lock(conn_mu_);
        control_ = control;
        data_ = data;
      }
      conn_cv_.notify_all();
      failures = 0;
      sync_requested_ = true;
      metrics_requested_ = true;
      spdlog::info("hub {} connected to {}", options_.hub_id, options_.supervisor.to_string());

      for (;;) {
        auto r = control->receive();
        if (r.status != net::Connection::ReadStatus::Ok) {
          if (r.status == net::Connection::ReadStatus::Protocol) {
            spdlog::warn("hub {}: protocol error {}", options_.hub_id, wire::to_string(r.decode));
          }
          break;
        }
        handle(*r.message, *control);
      }
    } catch (const Error& e) {
      if (!stop.stop_requested()) spdlog::debug("hub {}: {}", options_.hub_id, e.what());
    }
    {
      std::lock_guard lock(conn_mu_);
      control_.reset();
      data_.reset();
    }
    if (control) control->shutdown();
    if (data) data->shutdown();
    if (stop.stop_requested()) break;
    auto delay = backoff_delay(failures++, options_.backoff_min, options_.backoff_max);
    spdlog::info("hub {}: supervisor unreachable, retrying in {} ms", options_.hub_id, delay.count());
    nap(stop, delay);
  }
}

void Hub::handle(const wire::Message& msg, net::Connection& control) {
  if (const auto* resp = std::get_if<wire::TimesyncResp>(&msg)) {
    std::uint64_t t4 = clock_->now_ns();
    if (tracker_.add({resp->t1, resp->t2, resp->t3, t4})) metrics_requested_ = true;
  } else if (const auto* ping = std::get_if<wire::Ping>(&msg)) {
    control.send(wire::Pong{ping->nonce});
  } else if (const auto* cmd = std::get_if<wire::Control>(&msg)) {
    ControlRequest request;
    try {
      request = parse_control_request(cmd->body);
    } catch (const Error& e) {
      std::uint64_t id = cmd->body.is_object() ? cmd->body.value("request_id", std::uint64_t{0}) : 0;
      auto code = e.code() == Errc::BadSpec ? "BAD_SPEC" : "BAD_COMMAND";
      control.send(wire::ErrorReply{error_json(id, code, e.what())});
      return;
    }
    auto reply = this->control(request);
    if (reply.ok) {
      control.send(wire::ControlAck{ack_json(request, reply)});
    } else {
      control.send(wire::ErrorReply{error_json(request.request_id, reply.code, reply.message)});
    }
  } else if (std::holds_alternative<wire::Bye>(msg)) {
    control.shutdown();
  }
}

ControlReply Hub::control(const ControlRequest& request) {
  std::lock_guard lock(control_mu_);
  auto outcome = handle_control(control_state_, request);
  if (!outcome.reply.ok) {
    spdlog::warn("hub {}: {} rejected: {}", options_.hub_id, to_string(request.command), outcome.reply.message);
    return outcome.reply;
  }
  switch (request.command) {
    case ControlCommand::Configure:
      teardown();
      build_streams(*outcome.next.setup);
      metrics_interval_ms_ = std::max<std::uint32_t>(outcome.next.setup->metrics_interval_ms, 10);
      break;
    case ControlCommand::Start:
      control_state_ = outcome.next;
      start_streaming();
      break;
    case ControlCommand::Stop:
      stop_streaming();
      break;
    case ControlCommand::Reset:
      teardown();
      break;
    case ControlCommand::Status:
      break;
  }
  if (request.command != ControlCommand::Status) {
    spdlog::info("hub {}: {} -> {}", options_.hub_id, to_string(request.command), to_string(outcome.next.state));
  }
  control_state_ = outcome.next;
  metrics_requested_ = true;
  return outcome.reply;
}

void Hub::build_streams(const HubSetup& setup) {
  streams_.clear();
  codecs_ = std::make_unique<codec::CodecRegistry>();
  codecs_->register_session_codecs(setup.codecs);
  for (const auto& s : setup.streams) {
    streams_.push_back(std::make_unique<Stream>(s, setup.queue_capacity));
  }
}

void Hub::start_streaming() {
  // Fresh queues and counters for every run.
  build_streams(*control_state_.setup);
  for (auto& s : streams_) {
    Stream* raw = s.get();
    s->publisher = std::jthread([this, raw](std::stop_token st) { run_publisher(*raw, st); });
  }
  std::vector<std::pair<std::uint32_t, Stream*>> by_id;
  for (auto& s : streams_) by_id.emplace_back(s->id(), s.get());
  for (auto& spec : simdev::adapters_for_streams(control_state_.setup->streams)) {
    auto sink = [by_id](Frame&& f) {
      for (auto& [id, stream] : by_id) {
        if (id == f.stream_id) {
          stream->note_capture(f.capture_ts_ns);
          stream->queue.push(std::move(f));
          return true;
        }
      }
      return false;
    };
    adapters_.push_back(simdev::run_adapter(std::move(spec), sink, *clock_));
  }
}

void Hub::stop_streaming() {
  for (auto& a : adapters_) a.stop();
  adapters_.clear();
  auto deadline = std::chrono::steady_clock::now() + options_.stop_drain;
  for (auto& s : streams_) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() > 0) s->queue.wait_idle(left);
  }
  for (auto& s : streams_) {
    s->queue.close();
    s->publisher.request_stop();
  }
  for (auto& s : streams_) {
    if (s->publisher.joinable()) s->publisher.join();
  }
}

void Hub::teardown() {
  stop_streaming();
  streams_.clear();
}

void Hub::run_publisher(Stream& s, std::stop_token stop) {
  const auto codec_id = s.config.adapter.codec_id;
  while (!stop.stop_requested()) {
    auto conn = wait_data_connection(stop);
    if (!conn) continue;
    auto frame = s.queue.pop(100ms);
    if (!frame) continue;
    // Unencoded bytes, kept only when encoding replaced the payload.
    Bytes raw;
    try {
      if (codec_id == codec::kDrle) {
        raw = std::exchange(frame->payload, codec::drle_encode(frame->payload));
      } else if (codec_id != codec::kRaw) {
        raw = std::exchange(frame->payload, codecs_->encode(codec_id, frame->payload));
      }
      frame->codec_id = codec_id;
    } catch (const Error& e) {
      spdlog::warn("hub {}: stream {} seq {}: {}", options_.hub_id, s.id(), frame->seq, e.what());
      s.lost.fetch_add(1);
      s.queue.done();
      continue;
    }
    if (auto est = tracker_.current()) frame->session_ts_ns = clocksync::to_session_time(frame->capture_ts_ns, *est);
    wire::FrameMessage msg{std::move(*frame), 0};
    if (conn->send(msg)) {
      s.published.fetch_add(1);
      s.bytes_encoded.fetch_add(msg.frame.payload.size());
    } else {
      // A failed write never yields a decodable frame at the far end, so
      // the frame goes back to the queue for the next connection.
      if (codec_id != codec::kRaw) msg.frame.payload = std::move(raw);
      msg.frame.codec_id = 0;
      s.queue.requeue(std::move(msg.frame));
      // Let the connection manager notice and reconnect.
      if (auto c = control_connection()) c->shutdown();
      std::lock_guard lock(conn_mu_);
      if (data_ == conn) data_.reset();
    }
    s.queue.done();
  }
}

bool Hub::idle() const {
  std::lock_guard lock(control_mu_);
  for (const auto& s : streams_) {
    if (s->queue.busy()) return false;
  }
  return true;
}

json Hub::metrics_json() const {
  std::uint64_t now = clock_->now_ns();
  json streams = json::array();
  json j;
  {
    std::lock_guard lock(control_mu_);
    for (const auto& s : streams_) {
      streams.push_back({{"stream_id", s->id()},
                         {"name", s->config.descriptor.name},
                         {"captured", s->queue.pushed()},
                         {"published", s->published.load()},
                         {"dropped", s->queue.dropped() + s->lost.load()},
                         {"bytes_encoded", s->bytes_encoded.load()},
                         {"fps_1s", s->fps_1s(now)},
                         {"queue_depth", s->queue.depth()}});
    }
    j["hub_id"] = options_.hub_id;
    j["state"] = std::string(to_string(control_state_.state));
    j["session_name"] = control_state_.setup ? control_state_.setup->session_name : "";
  }
  j["ts_ns"] = now;
  j["streams"] = std::move(streams);
  auto est = tracker_.current();
  j["clock"] = est ? clocksync::to_json(*est) : json(nullptr);
  return j;
}

void Hub::send_metrics() {
  if (auto c = control_connection()) c->send(wire::Metrics{metrics_json()});
}

void Hub::send_sync_burst(std::stop_token stop) {
  for (std::size_t i = 0; i < options_.sync_burst && !stop.stop_requested(); ++i) {
    auto c = control_connection();
    if (!c) return;
    c->send(wire::TimesyncReq{clock_->now_ns()});
    nap(stop, options_.sync_spacing);
  }
}

void Hub::run_ticker(std::stop_token stop) {
  auto last_sync = std::chrono::steady_clock::now();
  auto last_metrics = last_sync;
  while (!stop.stop_requested()) {
    nap(stop, 10ms);
    if (!connected()) continue;
    auto now = std::chrono::steady_clock::now();
    if (sync_requested_.exchange(false) || now - last_sync >= options_.sync_interval) {
      send_sync_burst(stop);
      last_sync = std::chrono::steady_clock::now();
    }
    if (metrics_requested_.exchange(false) ||
        now - last_metrics >= std::chrono::milliseconds(metrics_interval_ms_.load())) {
      send_metrics();
      last_metrics = now;
    }
  }
}

}  // namespace dhub::hubd
