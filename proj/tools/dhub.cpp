// Copyright 2026 The dhub Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "dhub/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dhub::cli::run_cli(args, std::cout, std::cerr);
}
