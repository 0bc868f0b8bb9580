#pragma once

#include <string>
#include <vector>

namespace sensorpen::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kBackendError = 3 };

// Runs one subcommand. args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace sensorpen::cli
