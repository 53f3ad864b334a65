// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dhub {

/// Machine-readable failure codes shared by every module. The string form
/// (to_string) is what travels in ERROR messages and API bodies.
enum class Errc {
  InvalidArgument,
  EncodingError,
  BadMagic,
  BadVersion,
  UnknownType,
  Truncated,
  CrcMismatch,
  BadJson,
  BadPayload,
  TooLarge,
  InvalidSample,
  NoSync,
  UnknownCodec,
  Corrupt,
  IdTaken,
  EncodeFailed,
  DecodeFailed,
  WriteFailed,
  SeqOrder,
  UnknownStream,
  BadTransition,
  BadSpec,
  HubsNotReady,
  InvalidConfig,
  IoError,
  NotFound,
  Disconnected,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dhub
