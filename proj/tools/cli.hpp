#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hetlab::cli {

/// Exit codes: 0 success, 1 configuration, 2 numerical, 3 I/O.
enum ExitCode : int { kOk = 0, kConfig = 1, kNumerical = 2, kIo = 3 };

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const char* version();

}  // namespace hetlab::cli
