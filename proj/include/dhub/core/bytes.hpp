// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// Big-endian integer packing used by every serialized form (wire and file).

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace dhub {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline void store_be16(std::uint8_t* out, std::uint16_t v) {
  out[0] = static_cast<std::uint8_t>(v >> 8);
  out[1] = static_cast<std::uint8_t>(v);
}

inline void store_be32(std::uint8_t* out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v);
    v >>= 8;
  }
}

inline void store_be64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v);
    v >>= 8;
  }
}

inline std::uint16_t load_be16(const std::uint8_t* in) {
  return static_cast<std::uint16_t>((in[0] << 8) | in[1]);
}

inline std::uint32_t load_be32(const std::uint8_t* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | in[i];
  return v;
}

inline std::uint64_t load_be64(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
  return v;
}

/// Appends big-endian fields to a growing byte buffer.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { grow(2, [v](std::uint8_t* p) { store_be16(p, v); }); }
  void u32(std::uint32_t v) { grow(4, [v](std::uint8_t* p) { store_be32(p, v); }); }
  void u64(std::uint64_t v) { grow(8, [v](std::uint8_t* p) { store_be64(p, v); }); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void bytes(ByteView v) { out_.insert(out_.end(), v.begin(), v.end()); }

 private:
  template <typename F>
  void grow(std::size_t n, F&& put) {
    auto at = out_.size();
    out_.resize(at + n);
    put(out_.data() + at);
  }

  Bytes& out_;
};

/// Bounds-checked big-endian reader over a byte view. Reads past the end
/// set a sticky failure flag and return zero.
class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8() { return take(1) ? in_[pos_ - 1] : 0; }
  std::uint16_t u16() { return take(2) ? load_be16(in_.data() + pos_ - 2) : 0; }
  std::uint32_t u32() { return take(4) ? load_be32(in_.data() + pos_ - 4) : 0; }
  std::uint64_t u64() { return take(8) ? load_be64(in_.data() + pos_ - 8) : 0; }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  ByteView rest() const { return in_.subspan(pos_); }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }
  bool ok() const { return ok_; }

 private:
  bool take(std::size_t n) {
    if (!ok_ || in_.size() - pos_ < n) {
      ok_ = false;
      return false;
    }
    pos_ += n;
    return true;
  }

  ByteView in_;
  std::size_t pos_ = 0;
  bool ok_ = true;
};

}  // namespace dhub
