// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0
//
// The `dhub` operator client. Exit codes are part of the interface:
//   0 success, 1 remote/API error, 2 usage error, 3 verification findings.

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dhub::cli {

enum ExitCode : int { kOk = 0, kApiError = 1, kUsage = 2, kFindings = 3 };

inline constexpr const char* kDefaultApi = "http://127.0.0.1:8080";

/// Settings normally taken from the environment.
struct CliEnv {
  std::optional<std::string> api;      // DHUB_API
  std::optional<std::string> storage;  // DHUB_STORAGE
};

CliEnv process_env();

/// Runs one command line (without the program name) and returns its exit
/// code. Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliEnv& env = process_env());

/// "host:port" or a full URL, normalized to "http://host:port".
std::string normalize_api_url(const std::string& api);

}  // namespace dhub::cli
