// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// DRLE: byte-wise delta transform followed by run-length coding.
//
//   d[0] = b[0], d[i] = (b[i] - b[i-1]) mod 256
//
// The delta stream is coded left to right as control byte c plus content:
//   c in [0, 127]   -> c + 1 literal bytes follow
//   c in [128, 255] -> one byte follows, repeated c - 125 times (3..130)
// A run is emitted whenever the next three or more bytes are equal; literal
// runs end at 128 bytes or where such a run begins.

#pragma once

#include "dhub/core/bytes.hpp"

namespace dhub::codec {

Bytes drle_encode(ByteView input);

/// Throws Error(Corrupt) on truncated content, overrun of expected_len,
/// trailing bytes or a short result.
Bytes drle_decode(ByteView encoded, std::size_t expected_len);

}  // namespace dhub::codec
