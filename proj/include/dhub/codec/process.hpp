// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "dhub/core/bytes.hpp"

namespace dhub::codec {

struct FilterResult {
  int exit_code = -1;
  Bytes output;
  std::string error_output;
};

/// Runs `/bin/sh -c command`, feeding `input` on stdin and collecting
/// stdout and stderr. Throws Error(IoError) if the process cannot start.
FilterResult run_filter(const std::string& command, ByteView input);

}  // namespace dhub::codec
