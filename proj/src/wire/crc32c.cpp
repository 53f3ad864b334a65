// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/wire/crc32c.hpp"

#include <array>
#include <cstring>

#if defined(__x86_64__)
#include <nmmintrin.h>
#endif

namespace dhub::wire {

namespace {

constexpr std::uint32_t kPoly = 0x82F63B78u;

// Slicing-by-8 tables.
struct Tables {
  std::array<std::array<std::uint32_t, 256>, 8> t{};

  constexpr Tables() {
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? (c >> 1) ^ kPoly : c >> 1;
      t[0][i] = c;
    }
    for (std::uint32_t i = 0; i < 256; ++i) {
      for (int s = 1; s < 8; ++s) t[s][i] = (t[s - 1][i] >> 8) ^ t[0][t[s - 1][i] & 0xFF];
    }
  }
};

constexpr Tables kTables;

// Multiplication modulo the CRC polynomial in reflected bit order, where
// bit 31 holds the x^0 coefficient.
std::uint32_t multmodp(std::uint32_t a, std::uint32_t b) {
  std::uint32_t m = 1u << 31;
  std::uint32_t p = 0;
  for (;;) {
    if (a & m) {
      p ^= b;
      if ((a & (m - 1)) == 0) break;
    }
    m >>= 1;
    b = (b & 1) ? (b >> 1) ^ kPoly : b >> 1;
  }
  return p;
}

// kX2n[k] = x^(2^k) mod p.
struct PowerTable {
  std::array<std::uint32_t, 64> t{};

  constexpr PowerTable() {
    std::uint32_t p = 1u << 30;
    t[0] = p;
    for (std::size_t k = 1; k < t.size(); ++k) {
      // Inline multmodp(p, p) so the table stays constexpr.
      std::uint32_t a = p, b = p, m = 1u << 31, r = 0;
      for (;;) {
        if (a & m) {
          r ^= b;
          if ((a & (m - 1)) == 0) break;
        }
        m >>= 1;
        b = (b & 1) ? (b >> 1) ^ kPoly : b >> 1;
      }
      p = r;
      t[k] = p;
    }
  }
};

constexpr PowerTable kX2n;

// x^(n * 2^k) mod p.
std::uint32_t x2nmodp(std::uint64_t n, unsigned k) {
  std::uint32_t p = 1u << 31;
  while (n) {
    if (n & 1) p = multmodp(kX2n.t[k & 63], p);
    n >>= 1;
    ++k;
  }
  return p;
}

// Appends len zero bytes' worth of polynomial shift to a raw register.
std::uint32_t shift(std::uint32_t state, std::uint64_t len) {
  return multmodp(x2nmodp(len, 3), state);
}

std::uint32_t update_portable(std::uint32_t state, const std::uint8_t* p, std::size_t n) {
  const auto& t = kTables.t;
  while (n >= 8) {
    std::uint32_t lo, hi;
    std::memcpy(&lo, p, 4);
    std::memcpy(&hi, p + 4, 4);
#if __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    lo = __builtin_bswap32(lo);
    hi = __builtin_bswap32(hi);
#endif
    lo ^= state;
    state = t[7][lo & 0xFF] ^ t[6][(lo >> 8) & 0xFF] ^ t[5][(lo >> 16) & 0xFF] ^ t[4][lo >> 24] ^
            t[3][hi & 0xFF] ^ t[2][(hi >> 8) & 0xFF] ^ t[1][(hi >> 16) & 0xFF] ^ t[0][hi >> 24];
    p += 8;
    n -= 8;
  }
  while (n--) state = (state >> 8) ^ t[0][(state ^ *p++) & 0xFF];
  return state;
}

#if defined(__x86_64__)
__attribute__((target("sse4.2"))) std::uint32_t update_sse42(std::uint32_t state,
                                                              const std::uint8_t* p,
                                                              std::size_t n) {
  std::uint64_t s = state;
  while (n >= 8) {
    std::uint64_t v;
    std::memcpy(&v, p, 8);
    s = _mm_crc32_u64(s, v);
    p += 8;
    n -= 8;
  }
  auto s32 = static_cast<std::uint32_t>(s);
  while (n--) s32 = _mm_crc32_u8(s32, *p++);
  return s32;
}

// Three independent lanes hide the latency of the crc32 instruction; the
// lane states are then merged with polynomial shifts.
__attribute__((target("sse4.2"))) std::uint32_t update_sse42_3way(std::uint32_t state,
                                                                   const std::uint8_t* p,
                                                                   std::size_t n) {
  constexpr std::size_t kMin = 3 * 8192;
  if (n < kMin) return update_sse42(state, p, n);
  std::size_t lane = (n / 3) & ~std::size_t{7};
  const std::uint8_t* a = p;
  const std::uint8_t* b = p + lane;
  const std::uint8_t* c = p + 2 * lane;
  std::uint64_t sa = state, sb = 0, sc = 0;
  for (std::size_t i = 0; i < lane; i += 8) {
    std::uint64_t va, vb, vc;
    std::memcpy(&va, a + i, 8);
    std::memcpy(&vb, b + i, 8);
    std::memcpy(&vc, c + i, 8);
    sa = _mm_crc32_u64(sa, va);
    sb = _mm_crc32_u64(sb, vb);
    sc = _mm_crc32_u64(sc, vc);
  }
  std::uint32_t merged = shift(static_cast<std::uint32_t>(sa), lane) ^ static_cast<std::uint32_t>(sb);
  merged = shift(merged, lane) ^ static_cast<std::uint32_t>(sc);
  return update_sse42(merged, p + 3 * lane, n - 3 * lane);
}

using UpdateFn = std::uint32_t (*)(std::uint32_t, const std::uint8_t*, std::size_t);

UpdateFn select_update() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("sse4.2") ? update_sse42_3way : update_portable;
}

const UpdateFn kUpdate = select_update();
#endif

std::uint32_t update(std::uint32_t state, ByteView data) {
#if defined(__x86_64__)
  return kUpdate(state, data.data(), data.size());
#else
  return update_portable(state, data.data(), data.size());
#endif
}

}  // namespace

std::uint32_t crc32c(ByteView data) { return ~update(0xFFFFFFFFu, data); }

std::uint32_t crc32c_extend(std::uint32_t crc, ByteView data) { return ~update(~crc, data); }

std::uint32_t crc32c_combine(std::uint32_t crc_a, std::uint32_t crc_b, std::uint64_t len_b) {
  return shift(crc_a, len_b) ^ crc_b;
}

}  // namespace dhub::wire
