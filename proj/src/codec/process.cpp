// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include "dhub/codec/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>

#include "dhub/core/error.hpp"

extern char** environ;

namespace dhub::codec {

namespace {

struct Pipe {
  int fds[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fds, O_CLOEXEC) != 0) {
      throw Error(Errc::IoError, std::string("pipe: ") + std::strerror(errno));
    }
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (fds[0] >= 0) ::close(std::exchange(fds[0], -1));
  }
  void close_write() {
    if (fds[1] >= 0) ::close(std::exchange(fds[1], -1));
  }
};

}  // namespace

FilterResult run_filter(const std::string& command, ByteView input) {
  Pipe in, out, err;

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in.fds[0], 0);
  posix_spawn_file_actions_adddup2(&actions, out.fds[1], 1);
  posix_spawn_file_actions_adddup2(&actions, err.fds[1], 2);

  std::string sh = "/bin/sh", flag = "-c", cmd = command;
  std::array<char*, 4> argv{sh.data(), flag.data(), cmd.data(), nullptr};
  pid_t pid = 0;
  int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw Error(Errc::IoError, "cannot spawn '" + command + "': " + std::strerror(rc));

  in.close_read();
  out.close_write();
  err.close_write();
  ::fcntl(in.fds[1], F_SETFL, O_NONBLOCK);

  FilterResult result;
  std::size_t written = 0;
  if (input.empty()) in.close_write();
  std::array<std::uint8_t, 1 << 16> buf{};

  while (out.fds[0] >= 0 || err.fds[0] >= 0) {
    std::array<pollfd, 3> pfds{};
    nfds_t count = 0;
    int out_slot = -1, err_slot = -1, in_slot = -1;
    if (out.fds[0] >= 0) {
      out_slot = static_cast<int>(count);
      pfds[count++] = {out.fds[0], POLLIN, 0};
    }
    if (err.fds[0] >= 0) {
      err_slot = static_cast<int>(count);
      pfds[count++] = {err.fds[0], POLLIN, 0};
    }
    if (in.fds[1] >= 0) {
      in_slot = static_cast<int>(count);
      pfds[count++] = {in.fds[1], POLLOUT, 0};
    }
    if (::poll(pfds.data(), count, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (in_slot >= 0 && pfds[static_cast<std::size_t>(in_slot)].revents) {
      if (pfds[static_cast<std::size_t>(in_slot)].revents & (POLLERR | POLLHUP)) {
        in.close_write();
      } else {
        ssize_t w = ::write(in.fds[1], input.data() + written, input.size() - written);
        if (w > 0) written += static_cast<std::size_t>(w);
        if ((w < 0 && errno != EAGAIN) || written == input.size()) in.close_write();
      }
    }
    auto drain = [&](int slot, Pipe& p, auto&& sink) {
      if (slot < 0 || !pfds[static_cast<std::size_t>(slot)].revents) return;
      ssize_t r = ::read(p.fds[0], buf.data(), buf.size());
      if (r > 0) {
        sink(r);
      } else if (r == 0 || errno != EINTR) {
        p.close_read();
      }
    };
    drain(out_slot, out, [&](ssize_t r) {
      result.output.insert(result.output.end(), buf.begin(), buf.begin() + r);
    });
    drain(err_slot, err, [&](ssize_t r) {
      result.error_output.append(reinterpret_cast<const char*>(buf.data()),
                                 static_cast<std::size_t>(r));
    });
  }
  in.close_write();

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return result;
}

}  // namespace dhub::codec
