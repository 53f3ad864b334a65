// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/supd/supervisor.hpp"

#include <spdlog/spdlog.h>

#include <fstream>

#include "dhub/core/error.hpp"
#include "dhub/hubd/control.hpp"
#include "dhub/record/catalog.hpp"
#include "dhub/record/format.hpp"
#include "dhub/record/manifest.hpp"

namespace dhub::supd {

using nlohmann::json;
using namespace std::chrono_literals;

namespace {

std::int64_t steady_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::optional<json> read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return std::nullopt;
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

ApiResult error_result(int status, const std::string& code, const std::string& message) {
  return {status, {{"code", code}, {"message", message}}};
}

}  // namespace

struct Supervisor::HubLink {
  std::string hub_id;
  std::shared_ptr<net::Connection> control;
  std::shared_ptr<net::Connection> data;
  std::uint64_t generation = 0;
  std::optional<HubState> state;
  json hello;
  json metrics;
  std::optional<clocksync::OffsetEstimate> clock;
  std::uint64_t connected_since_ns = 0;
  std::uint64_t last_seen_ns = 0;
};

struct Supervisor::Sink {
  std::unique_ptr<record::RecordingWriter> writer;
  std::set<std::uint32_t> streams;
  std::atomic<bool> failed{false};
  std::mutex warned_mu;
  std::set<std::string> warned;

  // True the first time `key` is seen, so each warning fires once per session.
  bool first(const std::string& key) {
    std::lock_guard lock(warned_mu);
    return warned.insert(key).second;
  }
};

struct Supervisor::ConnThread {
  std::shared_ptr<net::Connection> conn;
  std::jthread thread;
  std::atomic<bool> done{false};
};

Supervisor::Supervisor(SupervisorOptions options) : options_(std::move(options)) {
  if (options_.clock == nullptr) {
    owned_clock_ = std::make_unique<simdev::SteadyClock>();
    clock_ = owned_clock_.get();
  } else {
    clock_ = options_.clock;
  }
}

Supervisor::~Supervisor() { stop(); }

void Supervisor::start() {
  if (running_) return;
  listener_ = std::make_unique<net::Listener>(options_.listen);
  running_ = true;
  owner_ = std::jthread([this](std::stop_token st) { run_owner(st); });
  accept_thread_ = std::jthread([this](std::stop_token st) { accept_loop(st); });
  spdlog::info("supervisor listening for hubs on {}:{}", options_.listen.host, listener_->port());
}

void Supervisor::stop() {
  if (!running_) return;
  running_ = false;
  if (finalizer_.joinable()) finalizer_.join();
  listener_->close();
  accept_thread_.request_stop();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::list<std::shared_ptr<ConnThread>> conns;
  {
    std::lock_guard lock(conns_mu_);
    conns.swap(conns_);
  }
  for (auto& c : conns) {
    c->conn->send(wire::Bye{});
    c->conn->shutdown();
  }
  for (auto& c : conns) {
    if (c->thread.joinable()) c->thread.join();
  }
  owner_.request_stop();
  jobs_cv_.notify_all();
  if (owner_.joinable()) owner_.join();
  abort_recording();
  events_.close_all();
}

std::uint16_t Supervisor::port() const { return listener_ ? listener_->port() : 0; }

// ---------------------------------------------------------------------------
// Owner task

void Supervisor::post(std::function<void()> job) {
  {
    std::lock_guard lock(jobs_mu_);
    jobs_.push_back(std::move(job));
  }
  jobs_cv_.notify_one();
}

template <class F>
auto Supervisor::call(F&& f) -> decltype(f()) {
  using R = decltype(f());
  auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(f));
  auto result = task->get_future();
  post([task] { (*task)(); });
  return result.get();
}

void Supervisor::run_owner(std::stop_token stop) {
  for (;;) {
    std::function<void()> job;
    {
      std::unique_lock lock(jobs_mu_);
      jobs_cv_.wait(lock, stop, [&] { return !jobs_.empty(); });
      if (jobs_.empty()) return;
      job = std::move(jobs_.front());
      jobs_.pop_front();
    }
    try {
      job();
    } catch (const std::exception& e) {
      spdlog::error("supervisor: {}", e.what());
    }
  }
}

void Supervisor::set_model(SessionModel next, const std::string& cause) {
  SessionState previous;
  bool degraded_changed;
  {
    std::lock_guard lock(model_mu_);
    previous = model_.state;
    degraded_changed = next.degraded != model_.degraded;
    model_ = std::move(next);
  }
  model_cv_.notify_all();
  if (previous != model_.state || degraded_changed) publish_session_state(previous, cause);
  if (degraded_changed && model_.degraded) {
    if (auto sink = current_sink()) sink->writer->set_degraded(true);
  }
}

void Supervisor::publish_session_state(SessionState previous, const std::string& cause) {
  events_.publish({{"type", "session_state"},
                   {"state", std::string(to_string(model_.state))},
                   {"previous", std::string(to_string(previous))},
                   {"event", cause},
                   {"session_name", model_.config ? model_.config->session_name : ""},
                   {"degraded", model_.degraded}});
}

TransitionResult Supervisor::apply_event(const SessionEvent& event) {
  auto r = transition(model_, event);
  if (!r.ok) return r;
  set_model(r.next, std::string(to_string(event.kind)));
  run_effects(r.effects);
  return r;
}

void Supervisor::set_last_error(const std::string& message) {
  std::lock_guard lock(model_mu_);
  last_error_ = message;
}

void Supervisor::observe(const std::string& hub_id, HubState state) {
  auto it = model_.hubs.find(hub_id);
  if (it != model_.hubs.end() && it->second == state) return;
  set_model(observe_hub(model_, hub_id, state), "hub_state");
  events_.publish({{"type", "hub_state"},
                   {"hub_id", hub_id},
                   {"state", std::string(to_string(state))},
                   {"connected", true}});
}

void Supervisor::run_effects(const std::vector<Effect>& effects) {
  for (const auto& e : effects) {
    switch (e.kind) {
      case EffectKind::ConfigureHub:
        configure_hub(e.hub_id);
        break;
      case EffectKind::OpenRecording:
        try {
          open_recording();
        } catch (const Error& err) {
          set_last_error(err.what());
          apply_event({EventKind::WriteFailed, std::nullopt, "", err.what()});
          return;
        }
        break;
      case EffectKind::StartHub:
        send_control(e.hub_id, {{"cmd", "START"}, {"request_id", next_request_id_++}});
        break;
      case EffectKind::StopHub: {
        std::uint64_t id = next_request_id_++;
        {
          std::lock_guard lock(hubs_mu_);
          stop_pending_[e.hub_id] = id;
        }
        if (!send_control(e.hub_id, {{"cmd", "STOP"}, {"request_id", id}})) {
          std::lock_guard lock(hubs_mu_);
          stop_pending_.erase(e.hub_id);
        }
        hubs_cv_.notify_all();
        break;
      }
      case EffectKind::FinalizeRecording:
        finalize_recording();
        break;
      case EffectKind::AbortRecording:
        abort_recording();
        break;
      case EffectKind::Warn:
        if (e.code == "WRITE_FAILED") set_last_error(e.message);
        warn(e.code, e.message, e.hub_id);
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// Effects

bool Supervisor::send_control(const std::string& hub_id, const json& body) {
  std::shared_ptr<net::Connection> conn;
  {
    std::lock_guard lock(hubs_mu_);
    auto it = hubs_.find(hub_id);
    if (it != hubs_.end()) conn = it->second->control;
  }
  if (!conn || !conn->send(wire::Control{body})) {
    spdlog::warn("supervisor: cannot reach hub {} for {}", hub_id, body.value("cmd", ""));
    return false;
  }
  return true;
}

void Supervisor::configure_hub(const std::string& hub_id) {
  if (!model_.config) return;
  hubd::ControlRequest req;
  req.command = hubd::ControlCommand::Configure;
  req.request_id = next_request_id_++;
  req.setup.session_name = model_.config->session_name;
  req.setup.streams = model_.config->streams_for_hub(hub_id);
  req.setup.codecs = model_.config->codecs;
  req.setup.queue_capacity = model_.config->queue_capacity;
  req.setup.metrics_interval_ms = model_.config->metrics_interval_ms;
  send_control(hub_id, hubd::to_json(req));
}

fs::path Supervisor::resolve_storage(const std::string& storage_dir) const {
  fs::path p(storage_dir);
  return p.is_absolute() ? p : options_.storage / p;
}

std::shared_ptr<Supervisor::Sink> Supervisor::current_sink() const {
  std::lock_guard lock(sink_mu_);
  return sink_;
}

void Supervisor::open_recording() {
  const auto& cfg = *model_.config;
  // A finalizer from the previous session may still be winding down.
  if (finalizer_.joinable()) finalizer_.join();

  record::PartialInfo info;
  info.session_name = cfg.session_name;
  info.created_ts_ns = record::wall_clock_ns();
  info.streams = cfg.streams;
  info.codecs = cfg.codecs;
  {
    std::lock_guard lock(hubs_mu_);
    for (const auto& [id, link] : hubs_) {
      if (link->clock) info.clock[id] = *link->clock;
    }
  }
  auto dir = record::unique_recording_dir(resolve_storage(cfg.storage_dir), cfg.session_name);

  auto sink = std::make_shared<Sink>();
  for (const auto& s : cfg.streams) sink->streams.insert(s.descriptor.stream_id);
  auto options = options_.writer;
  Sink* raw = sink.get();
  options.on_error = [this, raw](std::uint32_t stream_id, const Error& err) {
    if (raw->failed.exchange(true)) return;
    std::string reason = "stream " + std::to_string(stream_id) + ": " + err.what();
    post([this, reason] { apply_event({EventKind::WriteFailed, std::nullopt, "", reason}); });
  };
  sink->writer = std::make_unique<record::RecordingWriter>(dir, std::move(info), std::move(options));
  {
    std::lock_guard lock(counters_mu_);
    counters_ = {};
  }
  std::lock_guard lock(sink_mu_);
  sink_ = std::move(sink);
  last_recording_ = dir;
  spdlog::info("recording '{}' into {}", cfg.session_name, dir.string());
}

void Supervisor::abort_recording() {
  std::shared_ptr<Sink> sink;
  {
    std::lock_guard lock(sink_mu_);
    sink.swap(sink_);
  }
  // The writer's destructor flushes what it has and keeps the marker.
  if (sink) spdlog::warn("recording {} left unfinalized", sink->writer->directory().string());
}

void Supervisor::finalize_recording() {
  auto sink = current_sink();
  if (!sink) {
    post([this] { apply_event({EventKind::WriteFailed, std::nullopt, "", "no open recording"}); });
    return;
  }
  if (finalizer_.joinable()) finalizer_.join();
  bool degraded = model_.degraded;
  finalizer_ = std::jthread([this, sink, degraded] {
    {
      std::unique_lock lock(hubs_mu_);
      hubs_cv_.wait_for(lock, options_.stop_ack_timeout, [&] { return stop_pending_.empty(); });
      if (!stop_pending_.empty()) {
        spdlog::warn("supervisor: {} hub(s) did not acknowledge STOP", stop_pending_.size());
        stop_pending_.clear();
      }
    }
    // Grace window for frames still in flight on the data connections.
    auto grace_end = std::chrono::steady_clock::now() + options_.drain_grace;
    const auto quiet_ns = std::chrono::nanoseconds(options_.drain_quiet).count();
    while (std::chrono::steady_clock::now() < grace_end) {
      if (steady_ns() - last_frame_steady_ns_.load() >= quiet_ns) break;
      std::this_thread::sleep_for(10ms);
    }
    {
      std::lock_guard lock(sink_mu_);
      if (sink_ == sink) sink_.reset();
    }
    {
      std::lock_guard lock(hubs_mu_);
      for (const auto& [id, link] : hubs_) {
        if (link->clock) sink->writer->set_clock(id, *link->clock);
        if (!link->metrics.is_object() || !link->metrics.contains("streams")) continue;
        for (const auto& s : link->metrics["streams"]) {
          auto sid = s.value("stream_id", std::uint32_t{0});
          if (sink->streams.count(sid)) sink->writer->set_hub_dropped(sid, s.value("dropped", std::uint64_t{0}));
        }
      }
    }
    sink->writer->set_degraded(degraded);
    try {
      auto manifest = sink->writer->finalize();
      spdlog::info("recording finalized: {} frames, {} bytes", manifest.total_frames(), manifest.total_bytes());
      post([this] { apply_event({EventKind::Finalized, std::nullopt, "", ""}); });
    } catch (const Error& e) {
      std::string reason = e.what();
      post([this, reason] { apply_event({EventKind::WriteFailed, std::nullopt, "", reason}); });
    }
  });
}

void Supervisor::warn(const std::string& code, const std::string& message, const std::string& hub_id) {
  spdlog::warn("{}: {}", code, message);
  json ev{{"type", "warning"}, {"code", code}, {"message", message}};
  if (!hub_id.empty()) ev["hub_id"] = hub_id;
  events_.publish(std::move(ev));
}

// ---------------------------------------------------------------------------
// Hub connections

void Supervisor::accept_loop(std::stop_token stop) {
  while (!stop.stop_requested()) {
    auto socket = listener_->accept();
    if (!socket) break;
    auto ct = std::make_shared<ConnThread>();
    ct->conn = std::make_shared<net::Connection>(std::move(*socket));
    std::lock_guard lock(conns_mu_);
    // Reap finished handlers.
    for (auto it = conns_.begin(); it != conns_.end();) {
      if ((*it)->done) {
        if ((*it)->thread.joinable()) (*it)->thread.join();
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
    ConnThread* raw = ct.get();
    ct->thread = std::jthread([this, raw](std::stop_token st) {
      serve_connection(raw->conn, st);
      raw->done = true;
    });
    conns_.push_back(std::move(ct));
  }
}

void Supervisor::serve_connection(std::shared_ptr<net::Connection> conn, std::stop_token) {
  auto first = conn->receive();
  if (first.status != net::Connection::ReadStatus::Ok) return;
  const auto* hello = std::get_if<wire::Hello>(&*first.message);
  std::string hub_id;
  if (hello && hello->body.is_object()) {
    auto it = hello->body.find("hub_id");
    if (it != hello->body.end() && it->is_string()) hub_id = it->get<std::string>();
  }
  if (hub_id.empty()) {
    conn->send(wire::ErrorReply{{{"code", "BAD_HELLO"}, {"message", "first message must be HELLO with hub_id"}}});
    conn->shutdown();
    return;
  }
  if (hello->body.value("role", "control") == "data") {
    serve_data(hub_id, std::move(conn));
  } else {
    serve_control(hub_id, hello->body, std::move(conn));
  }
}

void Supervisor::serve_control(const std::string& hub_id, const json& hello, std::shared_ptr<net::Connection> conn) {
  std::shared_ptr<net::Connection> replaced;
  std::uint64_t generation;
  std::optional<HubState> reported;
  if (auto s = hello.find("state"); s != hello.end() && s->is_string()) reported = parse_hub_state(s->get<std::string>());
  {
    std::lock_guard lock(hubs_mu_);
    auto& link = hubs_[hub_id];
    if (!link) {
      link = std::make_shared<HubLink>();
      link->hub_id = hub_id;
    }
    replaced = std::exchange(link->control, conn);
    generation = ++link->generation;
    link->hello = hello;
    link->state = reported.value_or(HubState::Idle);
    link->connected_since_ns = record::wall_clock_ns();
    link->last_seen_ns = link->connected_since_ns;
  }
  if (replaced) {
    spdlog::warn("hub {} reconnected; dropping its previous control connection", hub_id);
    replaced->shutdown();
  }
  spdlog::info("hub {} connected", hub_id);
  HubState state = reported.value_or(HubState::Idle);
  post([this, hub_id, state] {
    observe(hub_id, state);
    apply_event({EventKind::HubRecovered, std::nullopt, hub_id, ""});
  });

  for (;;) {
    auto r = conn->receive();
    std::uint64_t t2 = clock_->now_ns();
    if (r.status != net::Connection::ReadStatus::Ok) {
      if (r.status == net::Connection::ReadStatus::Protocol) {
        warn("PROTOCOL_ERROR", "hub " + hub_id + ": " + std::string(wire::to_string(r.decode)), hub_id);
      }
      break;
    }
    if (auto* frame = std::get_if<wire::FrameMessage>(&*r.message)) {
      ingest(hub_id, std::move(frame->frame), r.payload_crc);
      continue;
    }
    if (std::holds_alternative<wire::Bye>(*r.message)) break;
    on_control_message(hub_id, *r.message, *conn, t2);
  }
  conn->shutdown();

  bool lost = false;
  {
    std::lock_guard lock(hubs_mu_);
    auto& link = hubs_[hub_id];
    if (link->generation == generation) {
      link->control.reset();
      link->state.reset();
      lost = true;
    }
    stop_pending_.erase(hub_id);
  }
  hubs_cv_.notify_all();
  if (lost) {
    spdlog::warn("hub {} disconnected", hub_id);
    post([this, hub_id] {
      events_.publish({{"type", "hub_state"}, {"hub_id", hub_id}, {"state", nullptr}, {"connected", false}});
      apply_event({EventKind::HubLost, std::nullopt, hub_id, ""});
    });
  }
}

void Supervisor::serve_data(const std::string& hub_id, std::shared_ptr<net::Connection> conn) {
  {
    std::lock_guard lock(hubs_mu_);
    auto& link = hubs_[hub_id];
    if (!link) {
      link = std::make_shared<HubLink>();
      link->hub_id = hub_id;
    }
    link->data = conn;
  }
  for (;;) {
    auto r = conn->receive();
    if (r.status != net::Connection::ReadStatus::Ok) {
      if (r.status == net::Connection::ReadStatus::Protocol) {
        warn("PROTOCOL_ERROR", "hub " + hub_id + " data: " + std::string(wire::to_string(r.decode)), hub_id);
      }
      break;
    }
    if (auto* frame = std::get_if<wire::FrameMessage>(&*r.message)) {
      ingest(hub_id, std::move(frame->frame), r.payload_crc);
    } else if (auto* ping = std::get_if<wire::Ping>(&*r.message)) {
      conn->send(wire::Pong{ping->nonce});
    } else if (std::holds_alternative<wire::Bye>(*r.message)) {
      break;
    }
  }
  conn->shutdown();
  std::lock_guard lock(hubs_mu_);
  auto& link = hubs_[hub_id];
  if (link->data == conn) link->data.reset();
}

void Supervisor::on_control_message(const std::string& hub_id, wire::Message& msg, net::Connection& conn,
                                    std::uint64_t t2) {
  if (const auto* req = std::get_if<wire::TimesyncReq>(&msg)) {
    conn.send(wire::TimesyncResp{req->t1, t2, clock_->now_ns()});
    return;
  }
  if (const auto* ping = std::get_if<wire::Ping>(&msg)) {
    conn.send(wire::Pong{ping->nonce});
    return;
  }
  if (const auto* m = std::get_if<wire::Metrics>(&msg)) {
    std::optional<HubState> state;
    {
      std::lock_guard lock(hubs_mu_);
      auto& link = hubs_[hub_id];
      link->metrics = m->body;
      link->last_seen_ns = record::wall_clock_ns();
      if (m->body.is_object()) {
        if (auto c = m->body.find("clock"); c != m->body.end() && c->is_object()) {
          try {
            link->clock = clocksync::offset_estimate_from_json(*c);
          } catch (const std::exception&) {
            // Keep the previous estimate.
          }
        }
        if (auto s = m->body.find("state"); s != m->body.end() && s->is_string()) {
          state = parse_hub_state(s->get<std::string>());
        }
      }
      if (state) link->state = state;
    }
    if (state) post([this, hub_id, s = *state] { observe(hub_id, s); });
    events_.publish({{"type", "metrics"}, {"hub_id", hub_id}, {"metrics", m->body}});
    return;
  }
  if (const auto* ack = std::get_if<wire::ControlAck>(&msg)) {
    std::optional<HubState> state;
    std::string cmd;
    if (ack->body.is_object()) {
      if (auto s = ack->body.find("state"); s != ack->body.end() && s->is_string()) {
        state = parse_hub_state(s->get<std::string>());
      }
      cmd = ack->body.value("cmd", "");
    }
    {
      std::lock_guard lock(hubs_mu_);
      if (state) hubs_[hub_id]->state = state;
      if (cmd == "STOP") stop_pending_.erase(hub_id);
    }
    hubs_cv_.notify_all();
    if (state) post([this, hub_id, s = *state] { observe(hub_id, s); });
    return;
  }
  if (const auto* err = std::get_if<wire::ErrorReply>(&msg)) {
    std::uint64_t id = 0;
    std::string code = "HUB_ERROR";
    std::string message = err->body.dump();
    if (err->body.is_object()) {
      id = err->body.value("request_id", std::uint64_t{0});
      code = err->body.value("code", code);
      message = err->body.value("message", message);
    }
    {
      std::lock_guard lock(hubs_mu_);
      auto it = stop_pending_.find(hub_id);
      if (it != stop_pending_.end() && it->second == id) stop_pending_.erase(it);
    }
    hubs_cv_.notify_all();
    warn(code, "hub " + hub_id + ": " + message, hub_id);
  }
}

void Supervisor::ingest(const std::string& hub_id, Frame&& frame, std::optional<std::uint32_t> payload_crc) {
  last_frame_steady_ns_ = steady_ns();
  auto bump = [&](std::uint64_t IngestCounters::*field) {
    std::lock_guard lock(counters_mu_);
    ++counters_.received;
    ++(counters_.*field);
  };
  auto sink = current_sink();
  if (!sink) {
    bump(&IngestCounters::discarded);
    return;
  }
  if (!sink->streams.count(frame.stream_id)) {
    bump(&IngestCounters::unknown_stream);
    if (sink->first("unknown:" + std::to_string(frame.stream_id))) {
      warn("UNKNOWN_STREAM", "hub " + hub_id + " sent frames for undeclared stream " + std::to_string(frame.stream_id),
           hub_id);
    }
    return;
  }
  bool backfilled = false;
  if (frame.session_ts_ns == 0) {
    std::optional<clocksync::OffsetEstimate> est;
    {
      std::lock_guard lock(hubs_mu_);
      if (auto it = hubs_.find(hub_id); it != hubs_.end()) est = it->second->clock;
    }
    if (est) {
      frame.session_ts_ns = clocksync::to_session_time(frame.capture_ts_ns, *est);
    } else {
      frame.session_ts_ns = frame.capture_ts_ns;
      if (sink->first("nosync:" + hub_id)) {
        warn("NO_SYNC", "hub " + hub_id + " has no clock estimate yet; using its capture time", hub_id);
      }
    }
    backfilled = true;
  }
  try {
    sink->writer->append(std::move(frame), payload_crc);
    std::lock_guard lock(counters_mu_);
    ++counters_.received;
    ++counters_.recorded;
    if (backfilled) ++counters_.backfilled;
  } catch (const Error& e) {
    if (e.code() == Errc::SeqOrder) {
      bump(&IngestCounters::seq_rejected);
      if (sink->first("seq:" + hub_id)) warn("SEQ_ORDER", e.what(), hub_id);
    } else if (e.code() == Errc::WriteFailed) {
      bump(&IngestCounters::discarded);
      if (!sink->failed.exchange(true)) {
        std::string reason = e.what();
        post([this, reason] { apply_event({EventKind::WriteFailed, std::nullopt, "", reason}); });
      }
    } else {
      // The recording is closing; the frame arrived too late.
      bump(&IngestCounters::discarded);
    }
  }
}

// ---------------------------------------------------------------------------
// API operations

ApiResult Supervisor::apply(const json& body) {
  auto parsed = parse_session_config(body);
  std::vector<Violation> violations = parsed.violations;
  if (parsed.config && violations.empty()) violations = validate_session_config(*parsed.config);
  if (!parsed.config || !violations.empty()) {
    return {400, {{"code", "INVALID_CONFIG"}, {"message", "session config is invalid"}, {"violations", to_json(violations)}}};
  }
  return call([this, cfg = *parsed.config]() -> ApiResult {
    auto r = apply_event({EventKind::Apply, cfg, "", ""});
    if (!r.ok) return error_result(r.code == "INVALID_CONFIG" ? 400 : 409, r.code, r.message);
    return {200, session_json()};
  });
}

ApiResult Supervisor::start_session() {
  return call([this]() -> ApiResult {
    auto r = apply_event({EventKind::Start, std::nullopt, "", ""});
    if (!r.ok) {
      ApiResult res = error_result(409, r.code, r.message);
      if (r.code == "HUBS_NOT_READY") res.body["hubs"] = hubs_not_ready(model_);
      return res;
    }
    if (model_.state == SessionState::Error) {
      std::lock_guard lock(model_mu_);
      return error_result(500, "WRITE_FAILED", last_error_);
    }
    return {200, session_json()};
  });
}

ApiResult Supervisor::stop_session() {
  return call([this]() -> ApiResult {
    auto r = apply_event({EventKind::Stop, std::nullopt, "", ""});
    if (!r.ok) return error_result(409, r.code, r.message);
    return {200, session_json()};
  });
}

SessionState Supervisor::state() const {
  std::lock_guard lock(model_mu_);
  return model_.state;
}

bool Supervisor::wait_for_state(SessionState state, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(model_mu_);
  return model_cv_.wait_for(lock, timeout, [&] { return model_.state == state; });
}

bool Supervisor::wait_for_hubs(const std::vector<std::string>& hub_ids, HubState state,
                               std::chrono::milliseconds timeout) const {
  std::unique_lock lock(model_mu_);
  return model_cv_.wait_for(lock, timeout, [&] {
    for (const auto& id : hub_ids) {
      auto it = model_.hubs.find(id);
      if (it == model_.hubs.end() || it->second != state) return false;
    }
    return true;
  });
}

std::optional<fs::path> Supervisor::recording_dir() const {
  std::lock_guard lock(sink_mu_);
  return last_recording_;
}

IngestCounters Supervisor::counters() const {
  std::lock_guard lock(counters_mu_);
  return counters_;
}

json Supervisor::session_json() const {
  SessionModel m;
  std::string last_error;
  {
    std::lock_guard lock(model_mu_);
    m = model_;
    last_error = last_error_;
  }
  json j{{"state", std::string(to_string(m.state))},
         {"session_name", m.config ? m.config->session_name : ""},
         {"config", m.config ? to_json(*m.config) : json(nullptr)},
         {"degraded", m.degraded},
         {"hubs_not_ready", m.state == SessionState::Configured ? hubs_not_ready(m) : std::vector<std::string>{}}};
  auto dir = recording_dir();
  j["recording"] = dir ? json(fs::relative(*dir, options_.storage).generic_string()) : json(nullptr);
  j["last_error"] = last_error.empty() ? json(nullptr) : json(last_error);
  return j;
}

json Supervisor::hubs_json() const {
  std::set<std::string> configured;
  {
    std::lock_guard lock(model_mu_);
    if (model_.config) {
      for (const auto& h : model_.config->hubs) configured.insert(h.hub_id);
    }
  }
  json out = json::array();
  std::lock_guard lock(hubs_mu_);
  std::set<std::string> seen;
  for (const auto& [id, link] : hubs_) {
    seen.insert(id);
    json streams = json::array();
    if (link->metrics.is_object() && link->metrics.contains("streams")) streams = link->metrics["streams"];
    out.push_back({{"hub_id", id},
                   {"connected", link->control != nullptr},
                   {"data_connected", link->data != nullptr},
                   {"state", link->state ? json(std::string(to_string(*link->state))) : json(nullptr)},
                   {"in_session", configured.count(id) > 0},
                   {"clock", link->clock ? clocksync::to_json(*link->clock) : json(nullptr)},
                   {"capabilities", link->hello.value("capabilities", json::object())},
                   {"streams", std::move(streams)},
                   {"connected_since_ns", link->connected_since_ns},
                   {"last_seen_ns", link->last_seen_ns}});
  }
  for (const auto& id : configured) {
    if (seen.count(id)) continue;
    out.push_back({{"hub_id", id},
                   {"connected", false},
                   {"data_connected", false},
                   {"state", nullptr},
                   {"in_session", true},
                   {"clock", nullptr},
                   {"capabilities", json::object()},
                   {"streams", json::array()},
                   {"connected_since_ns", 0},
                   {"last_seen_ns", 0}});
  }
  return out;
}

json Supervisor::metrics_json() const {
  json j;
  {
    std::lock_guard lock(model_mu_);
    j["session"] = {{"state", std::string(to_string(model_.state))},
                    {"session_name", model_.config ? model_.config->session_name : ""},
                    {"degraded", model_.degraded}};
  }
  j["ts_ns"] = record::wall_clock_ns();
  json hubs = json::object();
  {
    std::lock_guard lock(hubs_mu_);
    for (const auto& [id, link] : hubs_) hubs[id] = link->metrics.is_null() ? json::object() : link->metrics;
  }
  j["hubs"] = std::move(hubs);
  auto c = counters();
  j["ingest"] = {{"received", c.received},       {"recorded", c.recorded},
                 {"discarded", c.discarded},     {"unknown_stream", c.unknown_stream},
                 {"seq_rejected", c.seq_rejected}, {"backfilled", c.backfilled}};
  json rec = nullptr;
  if (auto sink = current_sink()) {
    json streams = json::array();
    for (auto id : sink->streams) {
      auto st = sink->writer->stats(id);
      streams.push_back({{"stream_id", id}, {"frames", st.frames}, {"bytes", st.payload_bytes}});
    }
    rec = {{"directory", sink->writer->directory().string()}, {"streams", std::move(streams)}};
  }
  j["recording"] = std::move(rec);
  return j;
}

json Supervisor::recordings_json() const {
  json out = json::array();
  for (const auto& r : record::list_recordings(options_.storage)) out.push_back(record::to_json(r));
  return out;
}

ApiResult Supervisor::recording_json(const std::string& name) const {
  fs::path rel(name);
  bool safe = !name.empty() && rel.is_relative();
  for (const auto& part : rel) safe = safe && part != ".." && part != ".";
  fs::path dir = options_.storage / rel;
  if (!safe || !record::is_recording_dir(dir)) return error_result(404, "NOT_FOUND", "no recording named '" + name + "'");
  if (auto m = read_json_file(dir / record::kManifestName)) {
    json body = *m;
    body["name"] = name;
    body["state"] = "complete";
    return {200, std::move(body)};
  }
  json body{{"name", name}, {"state", "partial"}};
  if (auto p = read_json_file(dir / record::kPartialName)) body["partial"] = *p;
  return {200, std::move(body)};
}

}  // namespace dhub::supd
