// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <random>

#include "dhub/clocksync/clocksync.hpp"
#include "dhub/core/error.hpp"
#include "test_support.hpp"

using namespace dhub;
using namespace dhub::clocksync;

namespace {

// One exchange where the supervisor clock reads hub time + offset. The
// forward and backward one-way delays are given separately.
SyncSample exchange(std::uint64_t t1, std::int64_t offset, std::uint64_t fwd, std::uint64_t back,
                    std::uint64_t turnaround = 1000) {
  SyncSample s;
  s.t1 = t1;
  s.t2 = static_cast<std::uint64_t>(static_cast<std::int64_t>(t1 + fwd) + offset);
  s.t3 = s.t2 + turnaround;
  s.t4 = static_cast<std::uint64_t>(static_cast<std::int64_t>(s.t3) - offset) + back;
  return s;
}

}  // namespace

TEST_SUITE("clocksync") {

TEST_CASE("sample formula examples") {
  auto a = sample_offset({100, 150, 160, 120});
  CHECK(a.offset_ns == 45);
  CHECK(a.rtt_ns == 10);
  auto b = sample_offset({0, 1, 1, 2});
  CHECK(b.offset_ns == 0);
  CHECK(b.rtt_ns == 2);
  auto c = sample_offset({0, 1000, 1000, 10});
  CHECK(c.offset_ns == 995);
  CHECK(c.rtt_ns == 10);
}

TEST_CASE("out-of-order samples are invalid") {
  CHECK_THROWS_AS(sample_offset({100, 150, 140, 120}), Error);  // t3 < t2
  CHECK_THROWS_AS(sample_offset({100, 150, 160, 90}), Error);   // t4 < t1
  CHECK_THROWS_AS(sample_offset({100, 150, 200, 120}), Error);  // server held it longer than the round trip
}

TEST_CASE("noise-free symmetric samples give the injected offset exactly") {
  std::mt19937_64 rng(test::test_seed());
  for (int i = 0; i < 5000; ++i) {
    std::int64_t offset = static_cast<std::int64_t>(rng() % 20'000'000'000ull) - 10'000'000'000ll;
    std::uint64_t d = rng() % 50'000'000;
    std::uint64_t t1 = 20'000'000'000ull + rng() % 1'000'000'000'000ull;
    auto r = sample_offset(exchange(t1, offset, d, d, rng() % 1'000'000));
    REQUIRE(r.offset_ns == offset);
    REQUIRE(r.rtt_ns == 2 * d);
  }
}

TEST_CASE("identical samples estimate with zero dispersion") {
  std::vector<SyncSample> s(9, SyncSample{100, 150, 160, 120});
  auto e = estimate_offset(s);
  CHECK(e.offset_ns == 45);
  CHECK(e.dispersion_ns == 0);
  CHECK(e.rtt_ns == 10);
  CHECK(e.sample_count == 3);
}

TEST_CASE("a single valid sample in a window of invalid ones") {
  std::vector<SyncSample> s(8, SyncSample{100, 150, 140, 120});
  s.insert(s.begin() + 4, SyncSample{0, 1000, 1000, 10});
  auto e = estimate_offset(s);
  CHECK(e.offset_ns == 995);
  CHECK(e.sample_count == 1);
  std::vector<SyncSample> none(9, SyncSample{100, 150, 140, 120});
  CHECK_THROWS_AS(estimate_offset(none), Error);
}

TEST_CASE("only the latest window is considered") {
  std::vector<SyncSample> s;
  for (int i = 0; i < 9; ++i) s.push_back(exchange(1'000'000 + i * 1000, 7'000, 100, 100));
  for (int i = 0; i < 9; ++i) s.push_back(exchange(2'000'000 + i * 1000, -3'000, 100, 100));
  CHECK(estimate_offset(s).offset_ns == -3'000);
}

TEST_CASE("5 ms offset with 1 ms latency and 0.2 ms jitter") {
  std::mt19937_64 rng(test::test_seed() + 1);
  std::uniform_int_distribution<std::int64_t> jitter(-200'000, 200'000);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<SyncSample> s;
    std::uint64_t t = 10'000'000'000ull;
    for (int i = 0; i < 9; ++i) {
      auto fwd = static_cast<std::uint64_t>(1'000'000 + jitter(rng));
      auto back = static_cast<std::uint64_t>(1'000'000 + jitter(rng));
      s.push_back(exchange(t, 5'000'000, fwd, back, 20'000));
      t += 5'000'000;
    }
    auto e = estimate_offset(s);
    REQUIRE(std::llabs(e.offset_ns - 5'000'000) < 200'000);
  }
}

TEST_CASE("error is bounded by the worst retained one-way asymmetry") {
  std::mt19937_64 rng(test::test_seed() + 2);
  for (int trial = 0; trial < 2000; ++trial) {
    std::int64_t offset = static_cast<std::int64_t>(rng() % 100'000'000) - 50'000'000;
    std::vector<SyncSample> s;
    std::uint64_t max_asym = 0;
    std::uint64_t t = 1'000'000'000ull;
    for (int i = 0; i < 9; ++i) {
      // Adversarial: one direction is routinely much slower.
      std::uint64_t fwd = 10'000 + rng() % 3'000'000;
      std::uint64_t back = 10'000 + ((rng() & 1) ? rng() % 100'000 : rng() % 5'000'000);
      s.push_back(exchange(t, offset, fwd, back, rng() % 50'000));
      max_asym = std::max(max_asym, fwd > back ? fwd - back : back - fwd);
      t += 5'000'000;
    }
    auto e = estimate_offset(s);
    // Each sample's error is (fwd - back) / 2; the median of retained
    // samples cannot exceed the largest of them.
    REQUIRE(static_cast<std::uint64_t>(std::llabs(e.offset_ns - offset)) <= max_asym / 2 + 1);
  }
}

TEST_CASE("session time mapping") {
  OffsetEstimate plus{45, 10, 1, 0};
  OffsetEstimate minus{-2000, 10, 1, 0};
  CHECK(to_session_time(1000, plus) == 1045);
  CHECK(to_session_time(1000, minus) == 0);
  OffsetEstimate big{std::numeric_limits<std::int64_t>::max(), 0, 1, 0};
  CHECK(to_session_time(std::numeric_limits<std::uint64_t>::max() - 5, big) ==
        std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("session time mapping preserves order") {
  std::mt19937_64 rng(test::test_seed() + 3);
  for (int i = 0; i < 10000; ++i) {
    OffsetEstimate e{static_cast<std::int64_t>(rng()) >> (rng() % 64), 0, 1, 0};
    std::uint64_t a = rng() >> (rng() % 64), b = rng() >> (rng() % 64);
    if (a > b) std::swap(a, b);
    REQUIRE(to_session_time(a, e) <= to_session_time(b, e));
  }
}

TEST_CASE("estimate JSON round-trip") {
  OffsetEstimate e{-123456789, 2000, 3, 77};
  CHECK(offset_estimate_from_json(to_json(e)) == e);
}

TEST_CASE("tracker keeps a sliding window and ignores invalid samples") {
  ClockTracker tracker(9);
  CHECK_FALSE(tracker.current().has_value());
  CHECK_FALSE(tracker.add({100, 150, 140, 120}));
  CHECK_FALSE(tracker.current().has_value());
  for (int i = 0; i < 9; ++i) CHECK(tracker.add(exchange(1'000'000 + i, 500, 10, 10)));
  REQUIRE(tracker.current().has_value());
  CHECK(tracker.current()->offset_ns == 500);
  for (int i = 0; i < 9; ++i) tracker.add(exchange(2'000'000 + i, -900, 10, 10));
  CHECK(tracker.current()->offset_ns == -900);
}

}  // TEST_SUITE
