#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qualbn {

/// Environment variable holding the default epsilon for `check` and `compare`.
inline constexpr const char* kEpsilonEnv = "QUALBN_EPSILON";

/// Exit codes: 0 every assertion passed, 1 an assertion failed, 2 operational error.
enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitError = 2 };

/// Runs the command line. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qualbn
