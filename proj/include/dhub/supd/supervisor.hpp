// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "dhub/clocksync/clocksync.hpp"
#include "dhub/net/tcp.hpp"
#include "dhub/record/writer.hpp"
#include "dhub/simdev/clock.hpp"
#include "dhub/supd/events.hpp"
#include "dhub/supd/session.hpp"

namespace dhub::supd {

namespace fs = std::filesystem;

struct SupervisorOptions {
  net::Endpoint listen{"0.0.0.0", 7401};
  /// Root for relative storage_dir values and for the recordings listing.
  fs::path storage = "recordings";
  /// Session time base; a plain SteadyClock when null.
  simdev::Clock* clock = nullptr;
  /// After every hub acknowledged STOP, frames still arriving are recorded
  /// until the data connections fall quiet or this much time has passed.
  std::chrono::milliseconds drain_grace{2000};
  /// Quiet period that ends the drain early.
  std::chrono::milliseconds drain_quiet{150};
  /// Longest wait for the hubs' STOP acknowledgements.
  std::chrono::milliseconds stop_ack_timeout{5000};
  record::WriterOptions writer;
};

/// HTTP-agnostic result of an API operation.
struct ApiResult {
  int status = 200;
  nlohmann::json body;
};

struct IngestCounters {
  std::uint64_t received = 0;
  std::uint64_t recorded = 0;
  /// Frames arriving while no recording is open.
  std::uint64_t discarded = 0;
  /// Frames for streams the session does not declare.
  std::uint64_t unknown_stream = 0;
  /// Frames refused by the writer for going backwards in seq.
  std::uint64_t seq_rejected = 0;
  /// Frames whose session_ts was filled in by the supervisor.
  std::uint64_t backfilled = 0;
};

/// The supervisor daemon minus its HTTP front end.
class Supervisor {
 public:
  explicit Supervisor(SupervisorOptions options);
  ~Supervisor();

  Supervisor(const Supervisor&) = delete;
  Supervisor& operator=(const Supervisor&) = delete;

  /// Binds the hub listener and starts serving; throws Error(IoError) when
  /// the port cannot be bound.
  void start();
  void stop();
  /// Bound hub port.
  std::uint16_t port() const;

  EventBus& events() { return events_; }
  simdev::Clock& clock() { return *clock_; }

  ApiResult apply(const nlohmann::json& body);
  ApiResult start_session();
  ApiResult stop_session();

  nlohmann::json session_json() const;
  nlohmann::json hubs_json() const;
  nlohmann::json metrics_json() const;
  nlohmann::json recordings_json() const;
  ApiResult recording_json(const std::string& name) const;

  SessionState state() const;
  /// Waits until the session reaches `state`; false on timeout.
  bool wait_for_state(SessionState state, std::chrono::milliseconds timeout) const;
  /// Waits until every named hub is connected and reports `state`.
  bool wait_for_hubs(const std::vector<std::string>& hub_ids, HubState state,
                     std::chrono::milliseconds timeout) const;
  /// Directory of the current or most recent recording.
  std::optional<fs::path> recording_dir() const;
  IngestCounters counters() const;

 private:
  struct HubLink;
  struct Sink;
  struct ConnThread;

  // Owner task: the only place the session model changes.
  void post(std::function<void()> job);
  template <class F>
  auto call(F&& f) -> decltype(f());
  void run_owner(std::stop_token stop);

  TransitionResult apply_event(const SessionEvent& event);
  void run_effects(const std::vector<Effect>& effects);
  void set_model(SessionModel next, const std::string& cause);
  void observe(const std::string& hub_id, HubState state);
  void set_last_error(const std::string& message);
  void publish_session_state(SessionState previous, const std::string& cause);

  void accept_loop(std::stop_token stop);
  void serve_connection(std::shared_ptr<net::Connection> conn, std::stop_token stop);
  void serve_control(const std::string& hub_id, const nlohmann::json& hello,
                     std::shared_ptr<net::Connection> conn);
  void serve_data(const std::string& hub_id, std::shared_ptr<net::Connection> conn);
  void on_control_message(const std::string& hub_id, wire::Message& msg, net::Connection& conn,
                          std::uint64_t t2);
  void ingest(const std::string& hub_id, Frame&& frame, std::optional<std::uint32_t> payload_crc);

  bool send_control(const std::string& hub_id, const nlohmann::json& body);
  void configure_hub(const std::string& hub_id);
  void open_recording();
  void finalize_recording();
  void abort_recording();
  void warn(const std::string& code, const std::string& message, const std::string& hub_id = "");

  fs::path resolve_storage(const std::string& storage_dir) const;
  std::shared_ptr<Sink> current_sink() const;

  SupervisorOptions options_;
  std::unique_ptr<simdev::Clock> owned_clock_;
  simdev::Clock* clock_;
  EventBus events_;

  // Owner queue.
  std::mutex jobs_mu_;
  std::condition_variable_any jobs_cv_;
  std::deque<std::function<void()>> jobs_;
  std::jthread owner_;

  // Written by the owner only; snapshot guarded for readers.
  SessionModel model_;
  mutable std::mutex model_mu_;
  mutable std::condition_variable model_cv_;
  std::string last_error_;

  mutable std::mutex hubs_mu_;
  mutable std::condition_variable hubs_cv_;
  std::map<std::string, std::shared_ptr<HubLink>> hubs_;
  // Hub id -> request id of an unanswered STOP.
  std::map<std::string, std::uint64_t> stop_pending_;
  std::atomic<std::uint64_t> next_request_id_{1};

  mutable std::mutex sink_mu_;
  std::shared_ptr<Sink> sink_;
  std::optional<fs::path> last_recording_;
  std::jthread finalizer_;

  mutable std::mutex counters_mu_;
  IngestCounters counters_;
  std::atomic<std::int64_t> last_frame_steady_ns_{0};

  std::unique_ptr<net::Listener> listener_;
  std::jthread accept_thread_;
  std::mutex conns_mu_;
  std::list<std::shared_ptr<ConnThread>> conns_;
  bool running_ = false;
};

}  // namespace dhub::supd
