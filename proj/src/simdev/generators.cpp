// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/simdev/generators.hpp"

#include <cmath>
#include <cstring>

#include "dhub/core/error.hpp"

namespace dhub::simdev {

void fill_sim_image(std::span<std::uint8_t> out, std::uint64_t prng_state, std::uint64_t seq) {
  if (out.size() < 12) throw Error(Errc::InvalidArgument, "simulated image needs >= 12 bytes");
  std::memcpy(out.data(), "SIMF", 4);
  store_be64(out.data() + 4, seq);

  XorShift64Star rng(prng_state);
  std::uint8_t* p = out.data() + 12;
  std::size_t left = out.size() - 12;
  while (left >= 8) {
    std::uint64_t v = __builtin_bswap64(rng.next());
    std::memcpy(p, &v, 8);
    p += 8;
    left -= 8;
  }
  if (left > 0) {
    std::uint64_t v = rng.next();
    for (std::size_t k = 0; k < left; ++k) p[k] = static_cast<std::uint8_t>(v >> (56 - 8 * k));
  }
}

Bytes generate_us_frame(std::uint64_t seed, std::uint64_t seq, std::uint32_t width,
                        std::uint32_t height) {
  Bytes out(static_cast<std::size_t>(width) * height * 3);
  fill_sim_image(out, seed ^ seq, seq);
  return out;
}

Pose generate_pose(std::uint64_t /*seed*/, double t) {
  const TrajectoryParams k;
  double phase = k.omega_rad_s * t;
  Pose pose;
  pose.position = {k.radius_m * std::cos(phase), k.radius_m * std::sin(phase),
                   k.height_m + k.amplitude_m * std::sin(2.0 * phase)};
  pose.orientation = {std::cos(phase / 2.0), 0.0, 0.0, std::sin(phase / 2.0)};
  return pose;
}

Bytes generate_depth_frame(std::uint64_t seq, std::uint32_t width, std::uint32_t height) {
  constexpr std::uint32_t kSpan = 1648;
  Bytes out(static_cast<std::size_t>(width) * height * 2);
  std::uint8_t* p = out.data();
  auto seq_mod = static_cast<std::uint32_t>(seq % kSpan);
  for (std::uint32_t y = 0; y < height; ++y) {
    std::uint32_t phase = static_cast<std::uint32_t>((std::uint64_t{y} + seq_mod) % kSpan);
    for (std::uint32_t x = 0; x < width; ++x) {
      std::uint16_t mm = static_cast<std::uint16_t>(400 + phase);
      p[0] = static_cast<std::uint8_t>(mm >> 8);
      p[1] = static_cast<std::uint8_t>(mm);
      p += 2;
      if (++phase == kSpan) phase = 0;
    }
  }
  return out;
}

std::pair<Bytes, Bytes> generate_rgbd_frame(std::uint64_t seed, std::uint64_t seq,
                                            std::uint32_t width, std::uint32_t height) {
  Bytes rgb(static_cast<std::size_t>(width) * height * 3);
  fill_sim_image(rgb, seed ^ (seq + kRgbSeedBias), seq);
  return {std::move(rgb), generate_depth_frame(seq, width, height)};
}

}  // namespace dhub::simdev
