// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <httplib.h>

#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "dhub/hubd/hub.hpp"
#include "dhub/record/catalog.hpp"
#include "dhub/record/manifest.hpp"
#include "dhub/record/verify.hpp"
#include "dhub/supd/api.hpp"
#include "dhub/supd/events.hpp"
#include "dhub/supd/session.hpp"
#include "dhub/supd/supervisor.hpp"
#include "expected_tables.hpp"
#include "test_support.hpp"

using namespace dhub;
using namespace dhub::supd;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

using S = SessionState;
using E = EventKind;

SessionConfig one_hub_config(const std::string& storage = "recs") {
  return test::make_session("unit", {"A"}, {test::pose_stream(1), test::us_stream(2, 32, 16)}, storage);
}

SessionEvent event_of(E kind) {
  SessionEvent e;
  e.kind = kind;
  if (kind == E::Apply) e.config = one_hub_config();
  if (kind == E::HubLost || kind == E::HubRecovered) e.hub_id = "A";
  if (kind == E::WriteFailed) e.reason = "disk full";
  return e;
}

bool has_effect(const TransitionResult& r, EffectKind k, const std::string& hub = "") {
  for (const auto& e : r.effects)
    if (e.kind == k && (hub.empty() || e.hub_id == hub)) return true;
  return false;
}

supd::SupervisorOptions sup_options(const fs::path& storage) {
  supd::SupervisorOptions o;
  o.listen = {"127.0.0.1", 0};
  o.storage = storage;
  o.drain_grace = 1000ms;
  o.drain_quiet = 100ms;
  return o;
}

hubd::HubOptions hub_options(const std::string& id, std::uint16_t port) {
  hubd::HubOptions o;
  o.hub_id = id;
  o.supervisor = {"127.0.0.1", port};
  o.backoff_min = 100ms;
  o.backoff_max = 400ms;
  o.sync_spacing = 2ms;
  return o;
}

}  // namespace

TEST_SUITE("supd") {

TEST_CASE("session transitions match the expected table in every state") {
  int cells = 0;
  for (S s : kAllSessionStates) {
    for (E e : kAllEventKinds) {
      SessionModel m;
      m.state = s;
      if (s != S::Idle) m.config = one_hub_config();
      m.hubs["A"] = HubState::Ready;
      auto r = transition(m, event_of(e));
      CAPTURE(to_string(s));
      CAPTURE(to_string(e));
      ++cells;
      auto want = test::expected_session_transition(s, e);
      if (!want) {
        CHECK_FALSE(r.ok);
        CHECK(r.code == "BAD_TRANSITION");
        CHECK(r.next == m);
        CHECK(r.effects.empty());
      } else {
        CHECK(r.ok);
        CHECK(r.next.state == *want);
      }
    }
  }
  CHECK(cells == 42);
}

TEST_CASE("transition effects") {
  SessionModel m;
  m.hubs["A"] = HubState::Idle;
  auto applied = transition(m, event_of(E::Apply));
  REQUIRE(applied.ok);
  CHECK(has_effect(applied, EffectKind::ConfigureHub, "A"));

  auto not_ready = transition(applied.next, event_of(E::Start));
  CHECK_FALSE(not_ready.ok);
  CHECK(not_ready.code == "HUBS_NOT_READY");
  CHECK(hubs_not_ready(applied.next) == std::vector<std::string>{"A"});

  auto ready = observe_hub(applied.next, "A", HubState::Ready);
  CHECK(hubs_not_ready(ready).empty());
  auto started = transition(ready, event_of(E::Start));
  REQUIRE(started.ok);
  REQUIRE(started.effects.size() >= 2);
  CHECK(started.effects[0].kind == EffectKind::OpenRecording);
  CHECK(has_effect(started, EffectKind::StartHub, "A"));

  auto lost = transition(started.next, event_of(E::HubLost));
  CHECK(lost.next.degraded);
  CHECK(lost.next.hubs.count("A") == 0);
  CHECK(has_effect(lost, EffectKind::Warn));

  auto back = observe_hub(lost.next, "A", HubState::Idle);
  auto recovered = transition(back, event_of(E::HubRecovered));
  CHECK(has_effect(recovered, EffectKind::ConfigureHub, "A"));
  CHECK(has_effect(recovered, EffectKind::StartHub, "A"));
  CHECK(recovered.next.degraded);  // sticky

  auto stopped = transition(recovered.next, event_of(E::Stop));
  REQUIRE(stopped.ok);
  CHECK(has_effect(stopped, EffectKind::StopHub, "A"));
  CHECK(stopped.effects.back().kind == EffectKind::FinalizeRecording);

  auto failed = transition(started.next, event_of(E::WriteFailed));
  CHECK(has_effect(failed, EffectKind::AbortRecording));

  // A fresh apply clears the degraded flag.
  SessionModel done = stopped.next;
  done.state = S::Complete;
  CHECK_FALSE(transition(done, event_of(E::Apply)).next.degraded);

  SessionEvent bad = event_of(E::Apply);
  bad.config->streams.push_back(test::pose_stream(1));
  auto invalid = transition(SessionModel{}, bad);
  CHECK_FALSE(invalid.ok);
  CHECK(invalid.code == "INVALID_CONFIG");
}

TEST_CASE("event bus stamps a global order and evicts for slow readers") {
  EventBus bus(3);
  auto a = bus.subscribe();
  auto b = bus.subscribe();
  for (int i = 0; i < 5; ++i) bus.publish({{"type", "x"}, {"i", i}});
  CHECK(a->overflowed() == 2);
  std::vector<std::uint64_t> seen;
  while (auto line = a->next(0ms)) seen.push_back(json::parse(*line)["seq"].get<std::uint64_t>());
  CHECK(seen == std::vector<std::uint64_t>{3, 4, 5});
  auto first_b = b->next(0ms);
  REQUIRE(first_b.has_value());
  CHECK(json::parse(*first_b)["i"] == 2);
  b.reset();
  CHECK(bus.subscribers() == 1);
  bus.close_all();
  CHECK(a->closed());
  CHECK_FALSE(a->next(10ms).has_value());
}

TEST_CASE("event stream interleaves heartbeats") {
  EventBus bus;
  EventStream stream(bus.subscribe(), 50ms);
  auto t0 = std::chrono::steady_clock::now();
  std::string chunk = stream.next_chunk();
  CHECK(std::chrono::steady_clock::now() - t0 >= 45ms);
  CHECK(json::parse(chunk.substr(0, chunk.find('\n')))["type"] == "heartbeat");
  bus.publish({{"type", "session_state"}});
  chunk = stream.next_chunk();
  CHECK(chunk.find("session_state") != std::string::npos);
  CHECK(chunk.back() == '\n');
  bus.close_all();
  // A closed stream may emit one last heartbeat and then ends.
  for (int i = 0; i < 3 && !(chunk = stream.next_chunk()).empty();) ++i;
  CHECK(chunk.empty());
}

TEST_CASE("HTTP API without hubs") {
  test::TempDir tmp;
  Supervisor sup(sup_options(tmp.path()));
  sup.start();
  ApiServer api(sup);
  int port = api.start("127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", port);

  auto get = cli.Get("/api/session");
  REQUIRE(get);
  CHECK(get->status == 200);
  CHECK(json::parse(get->body)["state"] == "IDLE");

  auto start = cli.Post("/api/session/start");
  REQUIRE(start);
  CHECK(start->status == 409);
  CHECK(json::parse(start->body)["code"] == "BAD_TRANSITION");

  json bad = to_json(one_hub_config());
  bad["streams"][1]["stream_id"] = 1;
  auto put_bad = cli.Put("/api/session", bad.dump(), "application/json");
  REQUIRE(put_bad);
  CHECK(put_bad->status == 400);
  auto bad_body = json::parse(put_bad->body);
  CHECK(bad_body["code"] == "INVALID_CONFIG");
  REQUIRE(bad_body["violations"].is_array());
  CHECK(bad_body["violations"][0]["code"] == "DUP_STREAM_ID");

  auto not_json = cli.Put("/api/session", "{nope", "application/json");
  REQUIRE(not_json);
  CHECK(not_json->status == 400);

  json good = to_json(one_hub_config());
  auto put = cli.Put("/api/session", good.dump(), "application/json");
  REQUIRE(put);
  CHECK(put->status == 200);
  auto put_body = json::parse(put->body);
  CHECK(put_body["state"] == "CONFIGURED");
  CHECK(put_body["config"] == good);
  CHECK(put_body["hubs_not_ready"] == json::array({"A"}));

  auto not_ready = cli.Post("/api/session/start");
  REQUIRE(not_ready);
  CHECK(not_ready->status == 409);
  auto nr = json::parse(not_ready->body);
  CHECK(nr["code"] == "HUBS_NOT_READY");
  CHECK(nr["hubs"] == json::array({"A"}));

  auto stop = cli.Post("/api/session/stop");
  REQUIRE(stop);
  CHECK(stop->status == 409);

  auto missing = cli.Get("/api/recordings/nothing-here");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto escape = cli.Get("/api/recordings/..%2Fetc");
  REQUIRE(escape);
  CHECK(escape->status == 404);
  auto list = cli.Get("/api/recordings");
  REQUIRE(list);
  CHECK(json::parse(list->body) == json::array());

  auto hubs = cli.Get("/api/hubs");
  REQUIRE(hubs);
  auto hj = json::parse(hubs->body);
  REQUIRE(hj.size() == 1);
  CHECK(hj[0]["hub_id"] == "A");
  CHECK(hj[0]["connected"] == false);

  auto unknown = cli.Get("/api/bogus");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  CHECK(json::parse(unknown->body)["code"] == "NOT_FOUND");

  api.stop();
  sup.stop();
}

TEST_CASE("end to end with an in-process hub") {
  test::TempDir tmp;
  Supervisor sup(sup_options(tmp.path()));
  sup.start();
  ApiServer api(sup);
  int port = api.start("127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", port);

  // Collect the NDJSON event stream on the side.
  std::mutex ev_mu;
  std::vector<json> events;
  std::atomic<bool> done{false};
  std::thread reader([&] {
    httplib::Client ev("127.0.0.1", port);
    ev.set_read_timeout(30, 0);
    std::string buf;
    ev.Get("/api/events", [&](const char* data, std::size_t len) {
      buf.append(data, len);
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        auto j = json::parse(buf.substr(0, nl), nullptr, false);
        buf.erase(0, nl + 1);
        std::lock_guard lock(ev_mu);
        events.push_back(j);
      }
      return !done.load();
    });
  });

  for (int i = 0; i < 500 && sup.events().subscribers() == 0; ++i) std::this_thread::sleep_for(10ms);
  REQUIRE(sup.events().subscribers() == 1);

  hubd::Hub hub(hub_options("A", sup.port()));
  hub.start();

  auto put = cli.Put("/api/session", to_json(one_hub_config()).dump(), "application/json");
  REQUIRE(put);
  REQUIRE(put->status == 200);
  REQUIRE(sup.wait_for_hubs({"A"}, HubState::Ready, 10s));

  // Frames arriving before any recording is open are discarded.
  net::Connection rogue(net::connect_tcp({"127.0.0.1", sup.port()}, 2000ms));
  REQUIRE(rogue.send(wire::Hello{{{"hub_id", "A"}, {"role", "data"}}}));
  Frame stray;
  stray.stream_id = 99;
  stray.session_ts_ns = 1;
  stray.payload = Bytes(10, 1);
  REQUIRE(rogue.send(wire::FrameMessage{stray, 0}));
  for (int i = 0; i < 200 && sup.counters().discarded == 0; ++i) std::this_thread::sleep_for(10ms);
  CHECK(sup.counters().discarded == 1);

  auto start = cli.Post("/api/session/start");
  REQUIRE(start);
  CHECK(start->status == 200);
  CHECK(json::parse(start->body)["state"] == "RECORDING");
  REQUIRE(sup.wait_for_hubs({"A"}, HubState::Streaming, 10s));
  std::this_thread::sleep_for(1500ms);

  stray.seq = 1;
  REQUIRE(rogue.send(wire::FrameMessage{stray, 0}));
  for (int i = 0; i < 200 && sup.counters().unknown_stream == 0; ++i) std::this_thread::sleep_for(10ms);
  CHECK(sup.counters().unknown_stream == 1);

  auto metrics = cli.Get("/api/metrics");
  REQUIRE(metrics);
  auto mj = json::parse(metrics->body);
  CHECK(mj["session"]["state"] == "RECORDING");
  CHECK(mj["hubs"].contains("A"));
  CHECK(mj["recording"].is_object());

  auto stop = cli.Post("/api/session/stop");
  REQUIRE(stop);
  CHECK(stop->status == 200);
  REQUIRE(sup.wait_for_state(S::Complete, 15s));

  auto dir = sup.recording_dir();
  REQUIRE(dir.has_value());
  auto report = record::verify_recording(*dir);
  CHECK(report.clean());
  std::ifstream in(*dir / record::kManifestName);
  auto manifest = record::manifest_from_json(json::parse(in));
  REQUIRE(manifest.streams.size() == 2);
  auto hub_metrics = hub.metrics_json();
  for (const auto& s : manifest.streams) {
    CAPTURE(s.stream_id());
    CHECK(s.drop_count == 0);
    CHECK(s.frame_count > 0);
    for (const auto& hs : hub_metrics["streams"])
      if (hs["stream_id"] == s.stream_id()) CHECK(hs["published"].get<std::uint64_t>() == s.frame_count);
  }
  CHECK(manifest.find(1)->frame_count >= 250);  // about 1.5 s at 200 fps
  CHECK(manifest.clock.count("A") == 1);

  auto rel = fs::relative(*dir, tmp.path()).generic_string();
  auto rec = cli.Get(("/api/recordings/" + rel).c_str());
  REQUIRE(rec);
  CHECK(rec->status == 200);
  CHECK(json::parse(rec->body)["state"] == "complete");
  auto list = json::parse(cli.Get("/api/recordings")->body);
  CHECK(list.size() == 1);

  // Applying again after COMPLETE reconfigures the hub.
  auto again = cli.Put("/api/session", to_json(one_hub_config()).dump(), "application/json");
  REQUIRE(again);
  CHECK(again->status == 200);
  CHECK(json::parse(again->body)["state"] == "CONFIGURED");

  done = true;
  hub.stop();
  api.stop();
  reader.join();
  sup.stop();

  std::vector<std::string> states;
  std::uint64_t last_seq = 0;
  bool ordered = true;
  for (const auto& e : events) {
    if (!e.contains("seq")) continue;
    ordered = ordered && e["seq"].get<std::uint64_t>() > last_seq;
    last_seq = e["seq"].get<std::uint64_t>();
    if (e["type"] == "session_state") states.push_back(e["state"].get<std::string>());
  }
  CHECK(ordered);
  std::vector<std::string> want = {"CONFIGURED", "RECORDING", "FINALIZING", "COMPLETE", "CONFIGURED"};
  CHECK(states == want);
  bool warned = false;
  for (const auto& e : events) warned = warned || (e["type"] == "warning" && e["code"] == "UNKNOWN_STREAM");
  CHECK(warned);
}

}  // TEST_SUITE
