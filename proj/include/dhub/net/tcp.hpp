// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "dhub/core/bytes.hpp"
#include "dhub/wire/message.hpp"

namespace dhub::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// Parses "host:port". Throws Error(InvalidArgument).
Endpoint parse_endpoint(const std::string& text);

/// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { reset(); }
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset();
  /// Shuts both directions down without closing, waking blocked readers.
  void shutdown();

 private:
  int fd_ = -1;
};

Socket connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout);

class Listener {
 public:
  explicit Listener(const Endpoint& ep);

  /// Bound port (useful when listening on port 0).
  std::uint16_t port() const { return port_; }
  /// Blocks until a client connects; nullopt once closed.
  std::optional<Socket> accept();
  void close();

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

/// Reads exactly n bytes; false on EOF or error.
bool read_exact(int fd, std::uint8_t* out, std::size_t n);

/// A message-oriented TCP connection: one reader thread, any number of
/// serialized writers.
class Connection {
 public:
  explicit Connection(Socket socket, std::size_t max_payload = 256u << 20);

  /// Encodes and writes one message; false once the peer is gone. FRAME
  /// payloads are written straight from the frame buffer.
  bool send(const wire::Message& msg);

  enum class ReadStatus { Ok, Closed, Protocol };

  struct ReadResult {
    ReadStatus status = ReadStatus::Closed;
    std::optional<wire::Message> message;
    wire::DecodeStatus decode = wire::DecodeStatus::Ok;
    /// CRC-32C of a FRAME's data bytes, a by-product of the trailer check.
    std::optional<std::uint32_t> payload_crc;
  };

  /// Blocks for the next message.
  ReadResult receive();

  void shutdown() { socket_.shutdown(); }
  int fd() const { return socket_.fd(); }

 private:
  bool write_frame(const wire::FrameMessage& msg);

  Socket socket_;
  std::size_t max_payload_;
  std::mutex write_mu_;
};

}  // namespace dhub::net
