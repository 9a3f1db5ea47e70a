#pragma once

#include <string>
#include <vector>

namespace lakelab {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitCache = 4 };

/// Runs one command; args excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace lakelab
