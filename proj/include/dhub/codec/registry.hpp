// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "dhub/core/bytes.hpp"
#include "dhub/core/config.hpp"

namespace dhub::codec {

inline constexpr std::uint8_t kRaw = 0;
inline constexpr std::uint8_t kDrle = 1;
inline constexpr std::uint8_t kFirstExternal = 128;

struct ExternalCodec {
  std::string encoder;
  std::string decoder;
  bool lossy = false;
};

/// Maps codec ids to implementations. RAW and DRLE are always present;
/// ids 128-255 may be bound to external filter commands.
class CodecRegistry {
 public:
  CodecRegistry() = default;
  CodecRegistry(const CodecRegistry& other);
  CodecRegistry& operator=(const CodecRegistry&) = delete;

  /// Throws Error(IdTaken) for built-in or already bound ids and
  /// Error(InvalidArgument) for the reserved range 2-127.
  void register_external(std::uint8_t codec_id, std::string encoder_cmd, std::string decoder_cmd,
                         bool lossy = false);
  /// Registers every codec a session declares, skipping ids already bound
  /// to the same commands.
  void register_session_codecs(const std::vector<ExternalCodecConfig>& codecs);

  bool contains(std::uint8_t codec_id) const;
  bool lossy(std::uint8_t codec_id) const;
  std::optional<ExternalCodec> external(std::uint8_t codec_id) const;

  /// Throws Error(UnknownCodec) or Error(EncodeFailed).
  Bytes encode(std::uint8_t codec_id, ByteView payload) const;
  /// Throws Error(UnknownCodec), Error(Corrupt) or Error(DecodeFailed).
  Bytes decode(std::uint8_t codec_id, ByteView payload, std::size_t expected_len) const;

 private:
  mutable std::mutex mu_;
  std::map<std::uint8_t, ExternalCodec> external_;
};

std::string_view codec_name(std::uint8_t codec_id);

}  // namespace dhub::codec
