// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/codec/drle.hpp"

#include <algorithm>
#include <cstring>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include "dhub/core/error.hpp"

namespace dhub::codec {

namespace {

constexpr std::size_t kMaxLiteral = 128;
constexpr std::size_t kMaxRun = 130;
constexpr std::size_t kMinRun = 3;

// First j >= from with d[j] == d[j+1] == d[j+2], or n when there is none.
std::size_t find_run(const std::uint8_t* d, std::size_t from, std::size_t n) {
  std::size_t j = from;
#if defined(__SSE2__)
  while (j + 18 <= n) {
    __m128i a = _mm_loadu_si128(reinterpret_cast<const __m128i*>(d + j));
    __m128i b = _mm_loadu_si128(reinterpret_cast<const __m128i*>(d + j + 1));
    __m128i c = _mm_loadu_si128(reinterpret_cast<const __m128i*>(d + j + 2));
    int mask = _mm_movemask_epi8(_mm_and_si128(_mm_cmpeq_epi8(a, b), _mm_cmpeq_epi8(b, c)));
    if (mask != 0) return j + static_cast<std::size_t>(__builtin_ctz(mask));
    j += 16;
  }
#endif
  for (; j + 2 < n; ++j) {
    if (d[j] == d[j + 1] && d[j + 1] == d[j + 2]) return j;
  }
  return n;
}

}  // namespace

Bytes drle_encode(ByteView input) {
  const std::size_t n = input.size();
  Bytes out;
  if (n == 0) return out;

  thread_local Bytes delta;
  delta.resize(n);
  std::uint8_t* d = delta.data();
  const std::uint8_t* b = input.data();
  d[0] = b[0];
  for (std::size_t i = 1; i < n; ++i) d[i] = static_cast<std::uint8_t>(b[i] - b[i - 1]);

  // Runs never grow the output, so the all-literal size bounds it.
  out.resize(n + (n + kMaxLiteral - 1) / kMaxLiteral);
  std::uint8_t* o = out.data();
  std::size_t literal_start = 0;

  auto flush_literals = [&](std::size_t end) {
    while (literal_start < end) {
      std::size_t len = std::min(kMaxLiteral, end - literal_start);
      *o++ = static_cast<std::uint8_t>(len - 1);
      std::memcpy(o, d + literal_start, len);
      o += len;
      literal_start += len;
    }
  };

  std::size_t i = 0;
  while (true) {
    i = find_run(d, i, n);
    if (i >= n) break;
    flush_literals(i);
    std::size_t run = kMinRun;
    while (run < kMaxRun && i + run < n && d[i + run] == d[i]) ++run;
    *o++ = static_cast<std::uint8_t>(run + 125);
    *o++ = d[i];
    i += run;
    literal_start = i;
  }
  flush_literals(n);
  out.resize(static_cast<std::size_t>(o - out.data()));
  return out;
}

Bytes drle_decode(ByteView encoded, std::size_t expected_len) {
  Bytes out(expected_len);
  std::size_t o = 0;
  std::size_t i = 0;
  const std::size_t n = encoded.size();
  while (i < n) {
    std::uint8_t c = encoded[i++];
    if (c < 128) {
      std::size_t len = std::size_t{c} + 1;
      if (n - i < len) throw Error(Errc::Corrupt, "literal run truncated at byte " + std::to_string(i));
      if (expected_len - o < len) throw Error(Errc::Corrupt, "literal run overruns output");
      std::memcpy(out.data() + o, encoded.data() + i, len);
      i += len;
      o += len;
    } else {
      std::size_t len = std::size_t{c} - 125;
      if (i >= n) throw Error(Errc::Corrupt, "repeat run missing its value byte");
      if (expected_len - o < len) throw Error(Errc::Corrupt, "repeat run overruns output");
      std::memset(out.data() + o, encoded[i++], len);
      o += len;
    }
  }
  if (o != expected_len) {
    throw Error(Errc::Corrupt, "decoded " + std::to_string(o) + " bytes, expected " +
                                   std::to_string(expected_len));
  }
  for (std::size_t k = 1; k < out.size(); ++k) {
    out[k] = static_cast<std::uint8_t>(out[k] + out[k - 1]);
  }
  return out;
}

}  // namespace dhub::codec
