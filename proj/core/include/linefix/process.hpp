// SPDX-License-Identifier: Apache-2.0
//
// Minimal subprocess runner (POSIX) with output capture and a deadline.
#pragma once

#include <optional>
#include <string>
#include <vector>

namespace linefix {

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string out;  // stdout
    std::string err;  // stderr
    bool ok() const { return exit_code == 0 && !timed_out; }
};

/// Runs argv[0] with the given arguments. `cwd` empty means inherit.
/// `timeout_s` <= 0 means no deadline. On timeout the process group is
/// killed and timed_out is set.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::string& cwd = "",
                          double timeout_s = 0.0);

}  // namespace linefix
