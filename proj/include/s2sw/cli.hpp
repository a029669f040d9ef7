// Copyright 2026 The s2sw Authors
// SPDX-License-Identifier: Apache-2.0
//
// The s2sw command line: training, evaluation, decoding and scoring
// subcommands over plain-text corpora and binary model files.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace s2sw::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitDivergence = 3,
};

/// `args[0]` is the program name. Usage errors and help go to `err` and
/// `out` respectively; results go to `out` unless an output file is given.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Inserts "--key=value" for every "key = value" line of each
/// "--config FILE" argument, ahead of the explicit flags so those win.
/// Blank lines and lines starting with '#' are skipped.
std::vector<std::string> expand_config_files(const std::vector<std::string>& args);

}  // namespace s2sw::cli
