// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "s2sw/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  const std::vector<std::string> args(argv, argv + argc);
  const int code = s2sw::cli::run(args, std::cout, std::cerr);
  std::cout.flush();
  return code;
}
