// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "dhub/core/bytes.hpp"

namespace dhub::wire {

/// CRC-32C (Castagnoli, reflected polynomial 0x82F63B78).
std::uint32_t crc32c(ByteView data);

/// Continues a finished CRC over more data: crc32c_extend(crc32c(a), b) ==
/// crc32c(a ++ b).
std::uint32_t crc32c_extend(std::uint32_t crc, ByteView data);

/// CRC of a concatenation from the CRCs of its parts:
/// crc32c_combine(crc32c(a), crc32c(b), b.size()) == crc32c(a ++ b).
std::uint32_t crc32c_combine(std::uint32_t crc_a, std::uint32_t crc_b, std::uint64_t len_b);

}  // namespace dhub::wire
