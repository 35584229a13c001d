#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lrising::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Runs the command line (args[0] is the program name).  Returns the exit
/// status: 0 success, 1 validation or usage error, 2 runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lrising::cli
