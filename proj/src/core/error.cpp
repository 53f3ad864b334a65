// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/core/error.hpp"

namespace dhub {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "INVALID_ARGUMENT";
    case Errc::EncodingError: return "ENCODING_ERROR";
    case Errc::BadMagic: return "BAD_MAGIC";
    case Errc::BadVersion: return "BAD_VERSION";
    case Errc::UnknownType: return "UNKNOWN_TYPE";
    case Errc::Truncated: return "TRUNCATED";
    case Errc::CrcMismatch: return "CRC_MISMATCH";
    case Errc::BadJson: return "BAD_JSON";
    case Errc::BadPayload: return "BAD_PAYLOAD";
    case Errc::TooLarge: return "TOO_LARGE";
    case Errc::InvalidSample: return "INVALID_SAMPLE";
    case Errc::NoSync: return "NO_SYNC";
    case Errc::UnknownCodec: return "UNKNOWN_CODEC";
    case Errc::Corrupt: return "CORRUPT";
    case Errc::IdTaken: return "ID_TAKEN";
    case Errc::EncodeFailed: return "ENCODE_FAILED";
    case Errc::DecodeFailed: return "DECODE_FAILED";
    case Errc::WriteFailed: return "WRITE_FAILED";
    case Errc::SeqOrder: return "SEQ_ORDER";
    case Errc::UnknownStream: return "UNKNOWN_STREAM";
    case Errc::BadTransition: return "BAD_TRANSITION";
    case Errc::BadSpec: return "BAD_SPEC";
    case Errc::HubsNotReady: return "HUBS_NOT_READY";
    case Errc::InvalidConfig: return "INVALID_CONFIG";
    case Errc::IoError: return "IO_ERROR";
    case Errc::NotFound: return "NOT_FOUND";
    case Errc::Disconnected: return "DISCONNECTED";
  }
  return "UNKNOWN";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace dhub
