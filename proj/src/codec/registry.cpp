// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/codec/registry.hpp"

#include <cstring>

#include "dhub/codec/drle.hpp"
#include "dhub/codec/process.hpp"
#include "dhub/core/error.hpp"

namespace dhub::codec {

std::string_view codec_name(std::uint8_t codec_id) {
  if (codec_id == kRaw) return "RAW";
  if (codec_id == kDrle) return "DRLE";
  if (codec_id >= kFirstExternal) return "EXTERNAL";
  return "RESERVED";
}

CodecRegistry::CodecRegistry(const CodecRegistry& other) {
  std::lock_guard lock(other.mu_);
  external_ = other.external_;
}

void CodecRegistry::register_external(std::uint8_t codec_id, std::string encoder_cmd,
                                      std::string decoder_cmd, bool lossy) {
  if (codec_id == kRaw || codec_id == kDrle) {
    throw Error(Errc::IdTaken, "codec id " + std::to_string(codec_id) + " is built in");
  }
  if (codec_id < kFirstExternal) {
    throw Error(Errc::InvalidArgument,
                "codec id " + std::to_string(codec_id) + " is reserved; use 128-255");
  }
  std::lock_guard lock(mu_);
  auto [it, inserted] =
      external_.try_emplace(codec_id, ExternalCodec{std::move(encoder_cmd), std::move(decoder_cmd), lossy});
  if (!inserted) {
    throw Error(Errc::IdTaken, "codec id " + std::to_string(codec_id) + " is already registered");
  }
}

void CodecRegistry::register_session_codecs(const std::vector<ExternalCodecConfig>& codecs) {
  for (const auto& c : codecs) {
    auto existing = external(c.codec_id);
    if (existing && existing->encoder == c.encoder && existing->decoder == c.decoder) continue;
    register_external(c.codec_id, c.encoder, c.decoder, c.lossy);
  }
}

bool CodecRegistry::contains(std::uint8_t codec_id) const {
  if (codec_id == kRaw || codec_id == kDrle) return true;
  std::lock_guard lock(mu_);
  return external_.count(codec_id) != 0;
}

bool CodecRegistry::lossy(std::uint8_t codec_id) const {
  auto ext = external(codec_id);
  return ext && ext->lossy;
}

std::optional<ExternalCodec> CodecRegistry::external(std::uint8_t codec_id) const {
  std::lock_guard lock(mu_);
  auto it = external_.find(codec_id);
  if (it == external_.end()) return std::nullopt;
  return it->second;
}

namespace {

[[noreturn]] void unknown(std::uint8_t codec_id) {
  throw Error(Errc::UnknownCodec, "codec " + std::to_string(codec_id) + " is not registered");
}

}  // namespace

Bytes CodecRegistry::encode(std::uint8_t codec_id, ByteView payload) const {
  if (codec_id == kRaw) return Bytes(payload.begin(), payload.end());
  if (codec_id == kDrle) return drle_encode(payload);
  auto ext = external(codec_id);
  if (!ext) unknown(codec_id);
  auto result = run_filter(ext->encoder, payload);
  if (result.exit_code != 0) {
    throw Error(Errc::EncodeFailed, "'" + ext->encoder + "' exited with " +
                                        std::to_string(result.exit_code) + ": " +
                                        result.error_output);
  }
  return std::move(result.output);
}

Bytes CodecRegistry::decode(std::uint8_t codec_id, ByteView payload,
                            std::size_t expected_len) const {
  if (codec_id == kRaw) {
    if (payload.size() != expected_len) {
      throw Error(Errc::Corrupt, "RAW payload is " + std::to_string(payload.size()) +
                                     " bytes, expected " + std::to_string(expected_len));
    }
    return Bytes(payload.begin(), payload.end());
  }
  if (codec_id == kDrle) return drle_decode(payload, expected_len);
  auto ext = external(codec_id);
  if (!ext) unknown(codec_id);
  auto result = run_filter(ext->decoder, payload);
  if (result.exit_code != 0) {
    throw Error(Errc::DecodeFailed, "'" + ext->decoder + "' exited with " +
                                        std::to_string(result.exit_code) + ": " +
                                        result.error_output);
  }
  if (result.output.size() != expected_len) {
    throw Error(Errc::Corrupt, "external decoder produced " +
                                   std::to_string(result.output.size()) + " bytes, expected " +
                                   std::to_string(expected_len));
  }
  return std::move(result.output);
}

}  // namespace dhub::codec
