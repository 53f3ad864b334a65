// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary framing for all hub <-> supervisor traffic. Layout (docs/wire.md):
//
//   'D' 'H' | version u8 (=1) | type u8 | payload_len u32 | payload | crc u32
//
// where crc is CRC-32C over every preceding byte of the message. All
// integers are big-endian.

#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include <nlohmann/json.hpp>

#include "dhub/core/bytes.hpp"
#include "dhub/core/types.hpp"

namespace dhub::wire {

inline constexpr std::uint8_t kMagic0 = 0x44;  // 'D'
inline constexpr std::uint8_t kMagic1 = 0x48;  // 'H'
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 8;
inline constexpr std::size_t kTrailerSize = 4;
inline constexpr std::size_t kFrameHeaderSize = 32;
inline constexpr std::uint64_t kMaxPayload = 0xFFFFFFFFu;

enum class MessageType : std::uint8_t {
  Hello = 0x01,
  Ping = 0x02,
  Pong = 0x03,
  TimesyncReq = 0x04,
  TimesyncResp = 0x05,
  Subscribe = 0x06,
  Unsubscribe = 0x07,
  Frame = 0x08,
  Metrics = 0x09,
  Control = 0x0A,
  ControlAck = 0x0B,
  Error = 0x0C,
  Bye = 0x0D,
};

std::string_view to_string(MessageType t);
bool is_known_type(std::uint8_t raw);

// JSON-bodied control-plane messages.
struct Hello { nlohmann::json body; bool operator==(const Hello&) const = default; };
struct Subscribe { nlohmann::json body; bool operator==(const Subscribe&) const = default; };
struct Unsubscribe { nlohmann::json body; bool operator==(const Unsubscribe&) const = default; };
struct Metrics { nlohmann::json body; bool operator==(const Metrics&) const = default; };
struct Control { nlohmann::json body; bool operator==(const Control&) const = default; };
struct ControlAck { nlohmann::json body; bool operator==(const ControlAck&) const = default; };
struct ErrorReply { nlohmann::json body; bool operator==(const ErrorReply&) const = default; };

struct Ping { std::uint64_t nonce = 0; bool operator==(const Ping&) const = default; };
struct Pong { std::uint64_t nonce = 0; bool operator==(const Pong&) const = default; };

struct TimesyncReq {
  std::uint64_t t1 = 0;
  bool operator==(const TimesyncReq&) const = default;
};

struct TimesyncResp {
  std::uint64_t t1 = 0;
  std::uint64_t t2 = 0;
  std::uint64_t t3 = 0;
  bool operator==(const TimesyncResp&) const = default;
};

/// Data-plane message: stream_id u32 | seq u64 | capture_ts u64 |
/// session_ts u64 | flags u16 | codec_id u8 | reserved u8 | data.
struct FrameMessage {
  Frame frame;
  std::uint16_t flags = 0;
  bool operator==(const FrameMessage&) const = default;
};

struct Bye { bool operator==(const Bye&) const = default; };

using Message = std::variant<Hello, Ping, Pong, TimesyncReq, TimesyncResp, Subscribe,
                             Unsubscribe, FrameMessage, Metrics, Control, ControlAck, ErrorReply,
                             Bye>;

MessageType type_of(const Message& msg);

/// Deterministic encoding. Throws Error(EncodingError) when the payload
/// exceeds the u32 length field.
Bytes encode_message(const Message& msg);

enum class DecodeStatus {
  Ok,
  BadMagic,
  BadVersion,
  UnknownType,
  Truncated,
  CrcMismatch,
  BadJson,
  BadPayload,
};

std::string_view to_string(DecodeStatus s);

struct DecodeResult {
  DecodeStatus status = DecodeStatus::Truncated;
  std::optional<Message> message;
  /// Bytes belonging to the decoded (or rejected) message.
  std::size_t consumed = 0;
  /// For Truncated: total bytes required before decoding can progress.
  std::size_t needed = 0;
};

/// Decodes exactly one message from the front of `bytes`. Never throws.
DecodeResult decode_message(ByteView bytes);

/// Parsed fixed header.
struct Header {
  MessageType type;
  std::uint32_t payload_len;
};

/// Validates magic, version and type of an 8-byte header.
DecodeStatus parse_header(ByteView header, Header& out);

/// Builds a message from its type and a CRC-verified payload.
DecodeStatus parse_payload(MessageType type, ByteView payload, std::optional<Message>& out);

/// Serializes the 32-byte FRAME payload prefix.
std::array<std::uint8_t, kFrameHeaderSize> encode_frame_header(const FrameMessage& msg);

/// Incremental decoder over a byte stream owned by one reader.
class StreamDecoder {
 public:
  void feed(ByteView bytes);

  /// Next complete message; nullopt when more bytes are needed. A fatal
  /// status (anything but Ok/Truncated) is sticky and reported via status().
  std::optional<Message> next();

  DecodeStatus status() const { return status_; }
  std::size_t buffered() const { return buffer_.size() - offset_; }

 private:
  Bytes buffer_;
  std::size_t offset_ = 0;
  DecodeStatus status_ = DecodeStatus::Ok;
};

}  // namespace dhub::wire
