// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/net/tcp.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/uio.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "dhub/core/error.hpp"
#include "dhub/wire/crc32c.hpp"

namespace dhub::net {

Endpoint parse_endpoint(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw Error(Errc::InvalidArgument, "expected host:port, got '" + text + "'");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  if (ep.host.empty()) ep.host = "0.0.0.0";
  try {
    std::size_t used = 0;
    int port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || port < 0 || port > 65535) throw std::out_of_range("");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "bad port in '" + text + "'");
  }
  return ep;
}

void Socket::reset() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

namespace {

void tune(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  int buf = 4 << 20;
  ::setsockopt(fd, SOL_SOCKET, SO_SNDBUF, &buf, sizeof buf);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &buf, sizeof buf);
}

addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  auto port = std::to_string(ep.port);
  int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) {
    throw Error(Errc::IoError, "cannot resolve " + ep.to_string() + ": " + gai_strerror(rc));
  }
  return res;
}

}  // namespace

Socket connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout) {
  addrinfo* res = resolve(ep, false);
  Socket sock(::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol));
  if (!sock.valid()) {
    ::freeaddrinfo(res);
    throw Error(Errc::IoError, std::string("socket: ") + std::strerror(errno));
  }
  tune(sock.fd());
  int flags = ::fcntl(sock.fd(), F_GETFL);
  ::fcntl(sock.fd(), F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(sock.fd(), res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0 && errno != EINPROGRESS) {
    throw Error(Errc::Disconnected, "connect " + ep.to_string() + ": " + std::strerror(errno));
  }
  if (rc != 0) {
    pollfd pfd{sock.fd(), POLLOUT, 0};
    rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (rc <= 0 || err != 0) {
      throw Error(Errc::Disconnected, "connect " + ep.to_string() + ": " +
                                          (rc <= 0 ? "timed out" : std::strerror(err)));
    }
  }
  ::fcntl(sock.fd(), F_SETFL, flags);
  return sock;
}

Listener::Listener(const Endpoint& ep) {
  addrinfo* res = resolve(ep, true);
  socket_ = Socket(::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol));
  int one = 1;
  ::setsockopt(socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  int rc = ::bind(socket_.fd(), res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0 || ::listen(socket_.fd(), 16) != 0) {
    throw Error(Errc::IoError, "listen " + ep.to_string() + ": " + std::strerror(errno));
  }
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(socket_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

std::optional<Socket> Listener::accept() {
  while (socket_.valid()) {
    int fd = ::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      tune(fd);
      return Socket(fd);
    }
    if (errno != EINTR && errno != ECONNABORTED) break;
  }
  return std::nullopt;
}

void Listener::close() {
  socket_.shutdown();
  socket_.reset();
}

bool read_exact(int fd, std::uint8_t* out, std::size_t n) {
  while (n > 0) {
    ssize_t got = ::recv(fd, out, n, 0);
    if (got > 0) {
      out += got;
      n -= static_cast<std::size_t>(got);
    } else if (got == 0 || errno != EINTR) {
      return false;
    }
  }
  return true;
}

namespace {

bool write_all(int fd, iovec* iov, int count) {
  while (count > 0) {
    msghdr msg{};
    msg.msg_iov = iov;
    msg.msg_iovlen = static_cast<std::size_t>(count);
    ssize_t sent = ::sendmsg(fd, &msg, MSG_NOSIGNAL);
    if (sent < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    auto left = static_cast<std::size_t>(sent);
    while (count > 0 && left >= iov->iov_len) {
      left -= iov->iov_len;
      ++iov;
      --count;
    }
    if (count > 0) {
      iov->iov_base = static_cast<std::uint8_t*>(iov->iov_base) + left;
      iov->iov_len -= left;
    }
  }
  return true;
}

}  // namespace

Connection::Connection(Socket socket, std::size_t max_payload)
    : socket_(std::move(socket)), max_payload_(max_payload) {}

bool Connection::write_frame(const wire::FrameMessage& msg) {
  const auto& data = msg.frame.payload;
  std::size_t payload_len = wire::kFrameHeaderSize + data.size();
  if (payload_len > wire::kMaxPayload) {
    throw Error(Errc::EncodingError, "frame payload exceeds the u32 length field");
  }
  std::array<std::uint8_t, wire::kHeaderSize + wire::kFrameHeaderSize> head{};
  head[0] = wire::kMagic0;
  head[1] = wire::kMagic1;
  head[2] = wire::kVersion;
  head[3] = static_cast<std::uint8_t>(wire::MessageType::Frame);
  store_be32(head.data() + 4, static_cast<std::uint32_t>(payload_len));
  auto frame_header = wire::encode_frame_header(msg);
  std::memcpy(head.data() + wire::kHeaderSize, frame_header.data(), frame_header.size());
  std::uint32_t crc = wire::crc32c_extend(wire::crc32c(head), data);
  std::array<std::uint8_t, 4> trailer{};
  store_be32(trailer.data(), crc);

  iovec iov[3] = {{head.data(), head.size()},
                  {const_cast<std::uint8_t*>(data.data()), data.size()},
                  {trailer.data(), trailer.size()}};
  std::lock_guard lock(write_mu_);
  return write_all(socket_.fd(), iov, 3);
}

bool Connection::send(const wire::Message& msg) {
  if (!socket_.valid()) return false;
  if (const auto* frame = std::get_if<wire::FrameMessage>(&msg)) return write_frame(*frame);
  Bytes bytes = wire::encode_message(msg);
  iovec iov{bytes.data(), bytes.size()};
  std::lock_guard lock(write_mu_);
  return write_all(socket_.fd(), &iov, 1);
}

Connection::ReadResult Connection::receive() {
  ReadResult result;
  std::array<std::uint8_t, wire::kHeaderSize> head{};
  if (!read_exact(socket_.fd(), head.data(), head.size())) return result;

  wire::Header header{};
  result.decode = wire::parse_header(head, header);
  if (result.decode != wire::DecodeStatus::Ok) {
    result.status = ReadStatus::Protocol;
    return result;
  }
  if (header.payload_len > max_payload_) {
    result.status = ReadStatus::Protocol;
    result.decode = wire::DecodeStatus::BadPayload;
    return result;
  }

  std::uint32_t crc = wire::crc32c(head);
  std::array<std::uint8_t, 4> trailer{};

  if (header.type == wire::MessageType::Frame && header.payload_len >= wire::kFrameHeaderSize) {
    // Read the data straight into the frame buffer.
    std::array<std::uint8_t, wire::kFrameHeaderSize> fh{};
    if (!read_exact(socket_.fd(), fh.data(), fh.size())) return result;
    Bytes data(header.payload_len - wire::kFrameHeaderSize);
    if (!read_exact(socket_.fd(), data.data(), data.size())) return result;
    if (!read_exact(socket_.fd(), trailer.data(), trailer.size())) return result;
    std::uint32_t data_crc = wire::crc32c(data);
    crc = wire::crc32c_combine(wire::crc32c_extend(crc, fh), data_crc, data.size());
    if (crc != load_be32(trailer.data())) {
      result.status = ReadStatus::Protocol;
      result.decode = wire::DecodeStatus::CrcMismatch;
      return result;
    }
    std::optional<wire::Message> parsed;
    result.decode = wire::parse_payload(header.type, fh, parsed);
    if (result.decode != wire::DecodeStatus::Ok) {
      result.status = ReadStatus::Protocol;
      return result;
    }
    std::get<wire::FrameMessage>(*parsed).frame.payload = std::move(data);
    result.payload_crc = data_crc;
    result.message = std::move(parsed);
    result.status = ReadStatus::Ok;
    return result;
  }

  Bytes payload(header.payload_len);
  if (!read_exact(socket_.fd(), payload.data(), payload.size())) return result;
  if (!read_exact(socket_.fd(), trailer.data(), trailer.size())) return result;
  if (wire::crc32c_extend(crc, payload) != load_be32(trailer.data())) {
    result.status = ReadStatus::Protocol;
    result.decode = wire::DecodeStatus::CrcMismatch;
    return result;
  }
  result.decode = wire::parse_payload(header.type, payload, result.message);
  result.status = result.decode == wire::DecodeStatus::Ok ? ReadStatus::Ok : ReadStatus::Protocol;
  return result;
}

}  // namespace dhub::net
