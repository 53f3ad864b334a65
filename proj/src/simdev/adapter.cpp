// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/simdev/adapter.hpp"

#include <cmath>
#include <map>

#include "dhub/core/error.hpp"
#include "dhub/simdev/generators.hpp"

namespace dhub::simdev {

AdapterSpec default_spec(AdapterType type, std::uint32_t first_stream_id,
                         const std::string& hub_id) {
  AdapterSpec spec;
  spec.type = type;
  switch (type) {
    case AdapterType::SimUs:
      spec.fps = 60.0;
      spec.streams.push_back({first_stream_id, "us", StreamKind::ImageRgb, 1920, 1080,
                              PixelFormat::Rgb8, 60.0, hub_id, PortKind::HdmiIn});
      break;
    case AdapterType::SimPose:
      spec.fps = 200.0;
      spec.streams.push_back({first_stream_id, "pose", StreamKind::Pose, 0, 0, PixelFormat::None,
                              200.0, hub_id, PortKind::Ethernet});
      break;
    case AdapterType::SimRgbd:
      spec.fps = 30.0;
      spec.streams.push_back({first_stream_id, "rgb", StreamKind::ImageRgb, 1280, 720,
                              PixelFormat::Rgb8, 30.0, hub_id, PortKind::UsbC});
      spec.streams.push_back({first_stream_id + 1, "depth", StreamKind::ImageDepth, 1280, 720,
                              PixelFormat::Depth16, 30.0, hub_id, PortKind::UsbC});
      break;
  }
  return spec;
}

std::vector<AdapterSpec> adapters_for_streams(const std::vector<StreamConfig>& streams) {
  std::vector<AdapterSpec> out;
  std::map<std::string, std::size_t> rgbd;  // instance -> index in out
  for (const auto& s : streams) {
    AdapterSpec spec;
    spec.type = s.adapter.type;
    spec.seed = s.adapter.seed;
    spec.fps = s.effective_fps();
    spec.jitter_ppm = s.adapter.jitter_ppm;
    if (s.adapter.type != AdapterType::SimRgbd) {
      spec.streams.push_back(s.descriptor);
      out.push_back(std::move(spec));
      continue;
    }
    auto [it, fresh] = rgbd.try_emplace(s.adapter.instance, out.size());
    if (fresh) out.push_back(std::move(spec));
    auto& group = out[it->second].streams;
    // Keep the RGB descriptor first.
    if (s.descriptor.kind == StreamKind::ImageRgb) {
      group.insert(group.begin(), s.descriptor);
    } else {
      group.push_back(s.descriptor);
    }
  }
  return out;
}

FrameSource::FrameSource(AdapterSpec spec) : spec_(std::move(spec)) {
  if (!(spec_.fps > 0.0) || !std::isfinite(spec_.fps)) {
    throw Error(Errc::BadSpec, "adapter fps must be positive");
  }
  std::size_t want = spec_.type == AdapterType::SimRgbd ? 2 : 1;
  if (spec_.streams.size() != want) {
    throw Error(Errc::BadSpec, std::string(to_string(spec_.type)) + " needs " +
                                   std::to_string(want) + " stream(s)");
  }
  period_ns_ = 1e9 / spec_.fps;
}

std::uint64_t FrameSource::tick_offset_ns(std::uint64_t k) const {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(k + 1) * period_ns_));
}

std::int64_t FrameSource::jitter_ns(std::uint64_t k) const {
  if (spec_.jitter_ppm <= 0.0) return 0;
  // splitmix64 over (seed, k) keeps jitter a pure function of the tick.
  std::uint64_t z = spec_.seed + (k + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  double unit = static_cast<double>(z >> 11) * 0x1.0p-53 * 2.0 - 1.0;  // [-1, 1)
  return static_cast<std::int64_t>(std::llround(unit * spec_.jitter_ppm * 1e-6 * period_ns_));
}

std::vector<Frame> FrameSource::frames_for_tick(std::uint64_t k, std::uint64_t capture_ts) const {
  std::vector<Frame> frames;
  auto make = [&](const StreamDescriptor& d, Bytes payload) {
    Frame f;
    f.stream_id = d.stream_id;
    f.seq = k;
    f.capture_ts_ns = capture_ts;
    f.payload = std::move(payload);
    frames.push_back(std::move(f));
  };
  switch (spec_.type) {
    case AdapterType::SimUs: {
      const auto& d = spec_.streams[0];
      make(d, generate_us_frame(spec_.seed, k, d.width, d.height));
      break;
    }
    case AdapterType::SimPose:
      make(spec_.streams[0],
           serialize_pose(generate_pose(spec_.seed, static_cast<double>(k) / spec_.fps)));
      break;
    case AdapterType::SimRgbd: {
      const auto& rgb = spec_.streams[0];
      auto [color, depth] = generate_rgbd_frame(spec_.seed, k, rgb.width, rgb.height);
      make(spec_.streams[0], std::move(color));
      make(spec_.streams[1], std::move(depth));
      break;
    }
  }
  return frames;
}

Bytes simulated_payload(const StreamConfig& stream, std::uint64_t seq) {
  const auto& d = stream.descriptor;
  switch (stream.adapter.type) {
    case AdapterType::SimUs:
      return generate_us_frame(stream.adapter.seed, seq, d.width, d.height);
    case AdapterType::SimPose:
      return serialize_pose(
          generate_pose(stream.adapter.seed, static_cast<double>(seq) / stream.effective_fps()));
    case AdapterType::SimRgbd:
      if (d.kind == StreamKind::ImageDepth) return generate_depth_frame(seq, d.width, d.height);
      {
        Bytes rgb(payload_size(d));
        fill_sim_image(rgb, stream.adapter.seed ^ (seq + kRgbSeedBias), seq);
        return rgb;
      }
  }
  throw Error(Errc::InvalidArgument, "unknown adapter type");
}

AdapterHandle& AdapterHandle::operator=(AdapterHandle&& other) noexcept {
  if (this != &other) {
    stop();
    shared_ = std::move(other.shared_);
    thread_ = std::move(other.thread_);
  }
  return *this;
}

AdapterHandle::~AdapterHandle() { stop(); }

std::uint64_t AdapterHandle::stop() {
  if (thread_.joinable()) {
    thread_.request_stop();
    thread_.join();
  }
  return shared_ ? shared_->emitted.load() : 0;
}

AdapterState AdapterHandle::state() const {
  return shared_ && shared_->running.load() ? AdapterState::Running : AdapterState::Stopped;
}

std::uint64_t AdapterHandle::frames_emitted() const { return shared_ ? shared_->emitted.load() : 0; }

std::uint64_t AdapterHandle::dropped() const { return shared_ ? shared_->dropped.load() : 0; }

const std::vector<StreamDescriptor>& AdapterHandle::descriptors() const {
  static const std::vector<StreamDescriptor> kNone;
  return shared_ ? shared_->source.spec().streams : kNone;
}

AdapterHandle run_adapter(AdapterSpec spec, FrameSink sink, Clock& clock) {
  AdapterHandle handle;
  handle.shared_ = std::shared_ptr<AdapterHandle::Shared>(
      new AdapterHandle::Shared{FrameSource(std::move(spec)), std::move(sink), &clock});
  auto shared = handle.shared_;
  shared->running = true;
  clock.attach();
  std::uint64_t start = clock.now_ns();
  handle.thread_ = std::jthread([shared, start](std::stop_token stop) {
    Clock& clk = *shared->clock;
    for (std::uint64_t k = 0;; ++k) {
      std::uint64_t deadline = start + shared->source.tick_offset_ns(k);
      if (!clk.sleep_until(deadline, stop)) break;
      std::int64_t jitter = shared->source.jitter_ns(k);
      std::uint64_t capture =
          jitter < 0 && static_cast<std::uint64_t>(-jitter) > deadline ? 0 : deadline + jitter;
      for (auto& frame : shared->source.frames_for_tick(k, capture)) {
        if (!shared->sink(std::move(frame))) shared->dropped.fetch_add(1);
      }
      shared->emitted.fetch_add(1);
    }
    shared->running = false;
    clk.detach();
  });
  return handle;
}

}  // namespace dhub::simdev
