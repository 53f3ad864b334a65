// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/wire/message.hpp"

#include "dhub/core/error.hpp"
#include "dhub/wire/crc32c.hpp"

namespace dhub::wire {

using nlohmann::json;

std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::Hello: return "HELLO";
    case MessageType::Ping: return "PING";
    case MessageType::Pong: return "PONG";
    case MessageType::TimesyncReq: return "TIMESYNC_REQ";
    case MessageType::TimesyncResp: return "TIMESYNC_RESP";
    case MessageType::Subscribe: return "SUBSCRIBE";
    case MessageType::Unsubscribe: return "UNSUBSCRIBE";
    case MessageType::Frame: return "FRAME";
    case MessageType::Metrics: return "METRICS";
    case MessageType::Control: return "CONTROL";
    case MessageType::ControlAck: return "CONTROL_ACK";
    case MessageType::Error: return "ERROR";
    case MessageType::Bye: return "BYE";
  }
  return "?";
}

bool is_known_type(std::uint8_t raw) { return raw >= 0x01 && raw <= 0x0D; }

std::string_view to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::Ok: return "OK";
    case DecodeStatus::BadMagic: return "BAD_MAGIC";
    case DecodeStatus::BadVersion: return "BAD_VERSION";
    case DecodeStatus::UnknownType: return "UNKNOWN_TYPE";
    case DecodeStatus::Truncated: return "TRUNCATED";
    case DecodeStatus::CrcMismatch: return "CRC_MISMATCH";
    case DecodeStatus::BadJson: return "BAD_JSON";
    case DecodeStatus::BadPayload: return "BAD_PAYLOAD";
  }
  return "?";
}

namespace {

struct TypeVisitor {
  MessageType operator()(const Hello&) const { return MessageType::Hello; }
  MessageType operator()(const Ping&) const { return MessageType::Ping; }
  MessageType operator()(const Pong&) const { return MessageType::Pong; }
  MessageType operator()(const TimesyncReq&) const { return MessageType::TimesyncReq; }
  MessageType operator()(const TimesyncResp&) const { return MessageType::TimesyncResp; }
  MessageType operator()(const Subscribe&) const { return MessageType::Subscribe; }
  MessageType operator()(const Unsubscribe&) const { return MessageType::Unsubscribe; }
  MessageType operator()(const FrameMessage&) const { return MessageType::Frame; }
  MessageType operator()(const Metrics&) const { return MessageType::Metrics; }
  MessageType operator()(const Control&) const { return MessageType::Control; }
  MessageType operator()(const ControlAck&) const { return MessageType::ControlAck; }
  MessageType operator()(const ErrorReply&) const { return MessageType::Error; }
  MessageType operator()(const Bye&) const { return MessageType::Bye; }
};

void append_json(Bytes& out, const json& body) {
  std::string text;
  try {
    text = body.dump();
  } catch (const json::exception& e) {
    throw Error(Errc::EncodingError, std::string("JSON body is not serializable: ") + e.what());
  }
  out.insert(out.end(), text.begin(), text.end());
}

Bytes encode_payload(const Message& msg) {
  Bytes out;
  ByteWriter w(out);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Ping> || std::is_same_v<T, Pong>) {
          w.u64(m.nonce);
        } else if constexpr (std::is_same_v<T, TimesyncReq>) {
          w.u64(m.t1);
        } else if constexpr (std::is_same_v<T, TimesyncResp>) {
          w.u64(m.t1);
          w.u64(m.t2);
          w.u64(m.t3);
        } else if constexpr (std::is_same_v<T, FrameMessage>) {
          auto header = encode_frame_header(m);
          out.reserve(header.size() + m.frame.payload.size());
          w.bytes(header);
          w.bytes(m.frame.payload);
        } else if constexpr (std::is_same_v<T, Bye>) {
          // empty
        } else {
          append_json(out, m.body);
        }
      },
      msg);
  return out;
}

template <typename T>
DecodeStatus json_message(ByteView payload, std::optional<Message>& out) {
  auto parsed = json::parse(payload.begin(), payload.end(), nullptr, false);
  if (parsed.is_discarded()) return DecodeStatus::BadJson;
  out = T{std::move(parsed)};
  return DecodeStatus::Ok;
}

}  // namespace

MessageType type_of(const Message& msg) { return std::visit(TypeVisitor{}, msg); }

std::array<std::uint8_t, kFrameHeaderSize> encode_frame_header(const FrameMessage& msg) {
  std::array<std::uint8_t, kFrameHeaderSize> h{};
  store_be32(h.data(), msg.frame.stream_id);
  store_be64(h.data() + 4, msg.frame.seq);
  store_be64(h.data() + 12, msg.frame.capture_ts_ns);
  store_be64(h.data() + 20, msg.frame.session_ts_ns);
  store_be16(h.data() + 28, msg.flags);
  h[30] = msg.frame.codec_id;
  h[31] = 0;
  return h;
}

Bytes encode_message(const Message& msg) {
  Bytes payload = encode_payload(msg);
  if (payload.size() > kMaxPayload) {
    throw Error(Errc::EncodingError, "payload of " + std::to_string(payload.size()) +
                                         " bytes exceeds the u32 length field");
  }
  Bytes out;
  out.reserve(kHeaderSize + payload.size() + kTrailerSize);
  ByteWriter w(out);
  w.u8(kMagic0);
  w.u8(kMagic1);
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(type_of(msg)));
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.bytes(payload);
  w.u32(crc32c(out));
  return out;
}

DecodeStatus parse_header(ByteView header, Header& out) {
  if (header[0] != kMagic0 || header[1] != kMagic1) return DecodeStatus::BadMagic;
  if (header[2] != kVersion) return DecodeStatus::BadVersion;
  if (!is_known_type(header[3])) return DecodeStatus::UnknownType;
  out.type = static_cast<MessageType>(header[3]);
  out.payload_len = load_be32(header.data() + 4);
  return DecodeStatus::Ok;
}

DecodeStatus parse_payload(MessageType type, ByteView payload, std::optional<Message>& out) {
  ByteReader r(payload);
  switch (type) {
    case MessageType::Ping:
    case MessageType::Pong: {
      if (payload.size() != 8) return DecodeStatus::BadPayload;
      std::uint64_t nonce = r.u64();
      if (type == MessageType::Ping) {
        out = Ping{nonce};
      } else {
        out = Pong{nonce};
      }
      return DecodeStatus::Ok;
    }
    case MessageType::TimesyncReq:
      if (payload.size() != 8) return DecodeStatus::BadPayload;
      out = TimesyncReq{r.u64()};
      return DecodeStatus::Ok;
    case MessageType::TimesyncResp: {
      if (payload.size() != 24) return DecodeStatus::BadPayload;
      TimesyncResp m;
      m.t1 = r.u64();
      m.t2 = r.u64();
      m.t3 = r.u64();
      out = m;
      return DecodeStatus::Ok;
    }
    case MessageType::Frame: {
      if (payload.size() < kFrameHeaderSize) return DecodeStatus::BadPayload;
      FrameMessage m;
      m.frame.stream_id = r.u32();
      m.frame.seq = r.u64();
      m.frame.capture_ts_ns = r.u64();
      m.frame.session_ts_ns = r.u64();
      m.flags = r.u16();
      m.frame.codec_id = r.u8();
      if (r.u8() != 0) return DecodeStatus::BadPayload;
      auto data = r.rest();
      m.frame.payload.assign(data.begin(), data.end());
      out = std::move(m);
      return DecodeStatus::Ok;
    }
    case MessageType::Bye:
      if (!payload.empty()) return DecodeStatus::BadPayload;
      out = Bye{};
      return DecodeStatus::Ok;
    case MessageType::Hello: return json_message<Hello>(payload, out);
    case MessageType::Subscribe: return json_message<Subscribe>(payload, out);
    case MessageType::Unsubscribe: return json_message<Unsubscribe>(payload, out);
    case MessageType::Metrics: return json_message<Metrics>(payload, out);
    case MessageType::Control: return json_message<Control>(payload, out);
    case MessageType::ControlAck: return json_message<ControlAck>(payload, out);
    case MessageType::Error: return json_message<ErrorReply>(payload, out);
  }
  return DecodeStatus::UnknownType;
}

DecodeResult decode_message(ByteView bytes) {
  DecodeResult result;
  if (bytes.size() < kHeaderSize) {
    // Reject garbage as early as the available prefix allows.
    if (!bytes.empty() && bytes[0] != kMagic0) return {DecodeStatus::BadMagic, {}, 0, 0};
    if (bytes.size() > 1 && bytes[1] != kMagic1) return {DecodeStatus::BadMagic, {}, 0, 0};
    if (bytes.size() > 2 && bytes[2] != kVersion) return {DecodeStatus::BadVersion, {}, 0, 0};
    if (bytes.size() > 3 && !is_known_type(bytes[3])) {
      return {DecodeStatus::UnknownType, {}, 0, 0};
    }
    return {DecodeStatus::Truncated, {}, 0, kHeaderSize};
  }
  Header header{};
  if (auto st = parse_header(bytes.first(kHeaderSize), header); st != DecodeStatus::Ok) {
    return {st, {}, 0, 0};
  }
  std::size_t total = kHeaderSize + std::size_t{header.payload_len} + kTrailerSize;
  if (bytes.size() < total) return {DecodeStatus::Truncated, {}, 0, total};

  result.consumed = total;
  auto body = bytes.first(total - kTrailerSize);
  std::uint32_t expected = load_be32(bytes.data() + total - kTrailerSize);
  if (crc32c(body) != expected) {
    result.status = DecodeStatus::CrcMismatch;
    return result;
  }
  result.status = parse_payload(header.type, body.subspan(kHeaderSize), result.message);
  if (result.status != DecodeStatus::Ok) result.message.reset();
  return result;
}

void StreamDecoder::feed(ByteView bytes) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> StreamDecoder::next() {
  if (status_ != DecodeStatus::Ok) return std::nullopt;
  auto view = ByteView(buffer_).subspan(offset_);
  auto result = decode_message(view);
  if (result.status == DecodeStatus::Truncated) return std::nullopt;
  if (result.status != DecodeStatus::Ok) {
    status_ = result.status;
    return std::nullopt;
  }
  offset_ += result.consumed;
  if (offset_ > (1u << 20) && offset_ * 2 > buffer_.size()) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
    offset_ = 0;
  }
  return std::move(result.message);
}

}  // namespace dhub::wire
