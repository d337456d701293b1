#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ckg {

/// Exit codes: 0 success, 1 runtime error, 2 usage error, 3 a verification check failed.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCheckFailed = 3;

/// Runs the ckg command line (arguments after the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ckg
