// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/clocksync/clocksync.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "dhub/core/error.hpp"

namespace dhub::clocksync {

namespace {

using i128 = __int128;

std::int64_t median_of(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  auto n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return static_cast<std::int64_t>((static_cast<i128>(v[n / 2 - 1]) + v[n / 2]) / 2);
}

}  // namespace

SampleResult sample_offset(const SyncSample& s) {
  if (s.t4 < s.t1 || s.t3 < s.t2) throw Error(Errc::InvalidSample, "timestamps out of order");
  i128 rtt = (static_cast<i128>(s.t4) - s.t1) - (static_cast<i128>(s.t3) - s.t2);
  if (rtt < 0) throw Error(Errc::InvalidSample, "negative round-trip time");
  i128 sum = (static_cast<i128>(s.t2) - s.t1) + (static_cast<i128>(s.t3) - s.t4);
  i128 offset = sum / 2;  // truncates toward zero
  if (offset > std::numeric_limits<std::int64_t>::max() ||
      offset < std::numeric_limits<std::int64_t>::min()) {
    throw Error(Errc::InvalidSample, "offset out of range");
  }
  return {static_cast<std::int64_t>(offset), static_cast<std::uint64_t>(rtt)};
}

OffsetEstimate estimate_offset(std::span<const SyncSample> samples, std::size_t window) {
  if (window == 0) throw Error(Errc::InvalidArgument, "window must be positive");
  auto recent = samples.size() > window ? samples.subspan(samples.size() - window) : samples;

  std::vector<SampleResult> valid;
  for (const auto& s : recent) {
    try {
      valid.push_back(sample_offset(s));
    } catch (const Error&) {
    }
  }
  if (valid.empty()) throw Error(Errc::NoSync, "no valid sync samples");

  std::size_t keep = std::min(valid.size(), (window + 2) / 3);
  std::stable_sort(valid.begin(), valid.end(),
                   [](const SampleResult& a, const SampleResult& b) { return a.rtt_ns < b.rtt_ns; });
  valid.resize(keep);

  std::vector<std::int64_t> offsets;
  for (const auto& v : valid) offsets.push_back(v.offset_ns);
  auto median = median_of(offsets);

  std::vector<std::int64_t> deviations;
  for (auto o : offsets) {
    auto d = static_cast<i128>(o) - median;
    deviations.push_back(static_cast<std::int64_t>(d < 0 ? -d : d));
  }

  OffsetEstimate est;
  est.offset_ns = median;
  est.rtt_ns = valid.front().rtt_ns;
  est.sample_count = static_cast<std::uint32_t>(keep);
  est.dispersion_ns = static_cast<std::uint64_t>(median_of(deviations));
  return est;
}

std::uint64_t to_session_time(std::uint64_t capture_ts_ns, const OffsetEstimate& est) {
  i128 t = static_cast<i128>(capture_ts_ns) + est.offset_ns;
  if (t < 0) return 0;
  if (t > static_cast<i128>(std::numeric_limits<std::uint64_t>::max())) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(t);
}

nlohmann::json to_json(const OffsetEstimate& est) {
  return {{"offset_ns", est.offset_ns},
          {"rtt_ns", est.rtt_ns},
          {"sample_count", est.sample_count},
          {"dispersion_ns", est.dispersion_ns}};
}

OffsetEstimate offset_estimate_from_json(const nlohmann::json& j) {
  OffsetEstimate est;
  est.offset_ns = j.at("offset_ns").get<std::int64_t>();
  est.rtt_ns = j.at("rtt_ns").get<std::uint64_t>();
  est.sample_count = j.value("sample_count", 1u);
  est.dispersion_ns = j.value("dispersion_ns", std::uint64_t{0});
  return est;
}

bool ClockTracker::add(const SyncSample& s) {
  try {
    sample_offset(s);
  } catch (const Error&) {
    return false;
  }
  std::lock_guard lock(mu_);
  samples_.push_back(s);
  while (samples_.size() > window_) samples_.pop_front();
  std::vector<SyncSample> copy(samples_.begin(), samples_.end());
  estimate_ = estimate_offset(copy, window_);
  return true;
}

std::optional<OffsetEstimate> ClockTracker::current() const {
  std::lock_guard lock(mu_);
  return estimate_;
}

}  // namespace dhub::clocksync
