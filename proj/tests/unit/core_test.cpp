// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "dhub/core/config.hpp"
#include "dhub/core/error.hpp"
#include "dhub/core/rate.hpp"
#include "dhub/core/types.hpp"
#include "test_support.hpp"

using namespace dhub;

namespace {

bool has_code(const std::vector<Violation>& vs, const std::string& code) {
  for (const auto& v : vs)
    if (v.code == code) return true;
  return false;
}

std::vector<std::uint64_t> uniform_train(std::size_t n, std::uint64_t span_ns) {
  std::vector<std::uint64_t> ts(n);
  for (std::size_t i = 0; i < n; ++i) ts[i] = i * span_ns / n;
  return ts;
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("payload sizes for the three stream kinds") {
  StreamDescriptor rgb{1, "us", StreamKind::ImageRgb, 1920, 1080, PixelFormat::Rgb8, 60, "A"};
  StreamDescriptor depth{2, "d", StreamKind::ImageDepth, 1280, 720, PixelFormat::Depth16, 30, "A"};
  StreamDescriptor pose{3, "p", StreamKind::Pose, 0, 0, PixelFormat::None, 200, "A"};
  CHECK(payload_size(rgb) == 6'220'800);
  CHECK(payload_size(depth) == 1'843'200);
  CHECK(payload_size(pose) == 56);
}

TEST_CASE("descriptor invariants") {
  StreamDescriptor ok{1, "us", StreamKind::ImageRgb, 4, 4, PixelFormat::Rgb8, 60, "A"};
  CHECK(descriptor_problems(ok).empty());

  auto bad = ok;
  bad.pixel_format = PixelFormat::Depth16;
  CHECK_FALSE(descriptor_problems(bad).empty());

  bad = ok;
  bad.width = 0;
  CHECK_FALSE(descriptor_problems(bad).empty());

  bad = ok;
  bad.nominal_fps = 0;
  CHECK_FALSE(descriptor_problems(bad).empty());

  StreamDescriptor pose{2, "p", StreamKind::Pose, 0, 0, PixelFormat::None, 200, "A"};
  CHECK(descriptor_problems(pose).empty());
  pose.width = 1;
  CHECK_FALSE(descriptor_problems(pose).empty());
}

TEST_CASE("enum names round-trip") {
  for (auto k : {StreamKind::ImageRgb, StreamKind::ImageDepth, StreamKind::Pose})
    CHECK(parse_stream_kind(to_string(k)) == k);
  for (auto p : {PixelFormat::Rgb8, PixelFormat::Depth16, PixelFormat::None})
    CHECK(parse_pixel_format(to_string(p)) == p);
  for (auto p : {PortKind::HdmiIn, PortKind::Ethernet, PortKind::UsbC, PortKind::UsbA, PortKind::Virtual})
    CHECK(parse_port_kind(to_string(p)) == p);
  for (auto s : {HubState::Idle, HubState::Ready, HubState::Streaming})
    CHECK(parse_hub_state(to_string(s)) == s);
  CHECK(to_string(HubState::Streaming) == "STREAMING");
  CHECK_FALSE(parse_stream_kind("VIDEO").has_value());
}

TEST_CASE("pose payload is 56 big-endian bytes in w-first order") {
  Pose p;
  p.position = {0.15, -0.25, 0.4};
  p.orientation = {0.5, 0.5, -0.5, 0.5};
  Bytes b = serialize_pose(p);
  REQUIRE(b.size() == kPosePayloadSize);
  // 0.15 as an IEEE double is 0x3FC3333333333333, most significant byte first.
  CHECK(b[0] == 0x3F);
  CHECK(b[1] == 0xC3);
  CHECK(b[7] == 0x33);
  // qw = 0.5 = 0x3FE0000000000000 at offset 24.
  CHECK(b[24] == 0x3F);
  CHECK(b[25] == 0xE0);
  CHECK(parse_pose(b) == p);
  CHECK(quaternion_norm(p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(parse_pose(ByteView(b.data(), 55)), Error);
}

TEST_CASE("reference session validates") {
  auto cfg = reference_session("A");
  auto problems = validate_session_config(cfg);
  CHECK(problems.empty());
  for (const auto& s : cfg.streams) CHECK(payload_size(s.descriptor) > 0);
}

TEST_CASE("duplicate stream ids are reported") {
  auto cfg = reference_session("A");
  cfg.streams[1].descriptor.stream_id = 7;
  cfg.streams[2].descriptor.stream_id = 7;
  CHECK(has_code(validate_session_config(cfg), "DUP_STREAM_ID"));
}

TEST_CASE("stream on an undeclared hub is reported") {
  auto cfg = reference_session("A");
  cfg.streams[0].descriptor.source_hub = "B";
  CHECK(has_code(validate_session_config(cfg), "UNKNOWN_HUB"));
}

TEST_CASE("empty storage dir is reported") {
  auto cfg = reference_session("A");
  cfg.storage_dir = "";
  CHECK(has_code(validate_session_config(cfg), "EMPTY_STORAGE_DIR"));
}

TEST_CASE("session config JSON round-trip") {
  auto cfg = reference_session("hub-7", "/data/rec");
  cfg.codecs.push_back({200, "cat", "cat", false});
  auto parsed = parse_session_config(to_json(cfg));
  REQUIRE(parsed.violations.empty());
  REQUIRE(parsed.config.has_value());
  CHECK(*parsed.config == cfg);
}

TEST_CASE("malformed config JSON yields violations, not exceptions") {
  nlohmann::json j = {{"session_name", 5}, {"streams", "nope"}};
  ParsedConfig parsed;
  CHECK_NOTHROW(parsed = parse_session_config(j));
  CHECK_FALSE(parsed.config.has_value());
  CHECK_FALSE(parsed.violations.empty());
  CHECK_NOTHROW(parse_session_config(nlohmann::json::array()));
}

TEST_CASE("valid config implies payload_size is defined for every stream") {
  std::mt19937_64 rng(test::test_seed());
  for (int iter = 0; iter < 500; ++iter) {
    auto cfg = reference_session("A");
    for (auto& s : cfg.streams) {
      if (s.descriptor.kind == StreamKind::Pose) continue;
      s.descriptor.width = static_cast<std::uint32_t>(rng() % 3) * static_cast<std::uint32_t>(rng() % 2000);
      s.descriptor.height = static_cast<std::uint32_t>(rng() % 1200);
    }
    if (validate_session_config(cfg).empty()) {
      for (const auto& s : cfg.streams) {
        CHECK(payload_size(s.descriptor) ==
              std::size_t{s.descriptor.width} * s.descriptor.height *
                      (s.descriptor.pixel_format == PixelFormat::Rgb8 ? 3 : 2) +
                  (s.descriptor.kind == StreamKind::Pose ? 56 : 0));
      }
    }
  }
}

TEST_CASE("mean_fps examples") {
  CHECK(mean_fps(std::span<const std::uint64_t>{}, 1'000'000'000) == 0.0);
  auto sixty = uniform_train(60, 1'000'000'000);
  CHECK(mean_fps(sixty, 1'000'000'000) == doctest::Approx(60.0));
  auto us = uniform_train(4622, 78'000'000'000ull);
  CHECK(std::abs(mean_fps(us, 78'000'000'000ll) - 59.26) <= 0.01);
  CHECK_THROWS_AS(mean_fps(sixty, 0), Error);
}

TEST_CASE("mean_fps recovers a uniform rate within one frame per window") {
  std::mt19937_64 rng(test::test_seed());
  for (int iter = 0; iter < 1000; ++iter) {
    double rate = 1.0 + static_cast<double>(rng() % 50000) / 100.0;
    double period_ns = 1e9 / rate;
    std::int64_t window = static_cast<std::int64_t>(period_ns * (2.0 + static_cast<double>(rng() % 1000) / 10.0));
    std::size_t n = static_cast<std::size_t>(static_cast<double>(window) / period_ns) + 5 + rng() % 50;
    std::uint64_t t0 = rng() % 1'000'000'000;
    std::vector<std::uint64_t> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = t0 + static_cast<std::uint64_t>(std::llround(static_cast<double>(i) * period_ns));
    double got = mean_fps(ts, window);
    double window_s = static_cast<double>(window) * 1e-9;
    CHECK(std::abs(got - rate) <= 1.0 / window_s + 1e-9);
  }
}

TEST_CASE("errors carry their code") {
  Error e(Errc::SeqOrder, "x");
  CHECK(e.code() == Errc::SeqOrder);
  CHECK(to_string(Errc::SeqOrder) == "SEQ_ORDER");
  CHECK(to_string(Errc::BadTransition) == "BAD_TRANSITION");
}

}  // TEST_SUITE
