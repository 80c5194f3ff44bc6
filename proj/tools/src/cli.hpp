#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace loopdyn::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;  // runtime error, nothing (complete) written
inline constexpr int kUsage = 2;    // bad flags or parameters, nothing written
inline constexpr int kAborted = 3;  // loop aborted; partial trajectory on disk

// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace loopdyn::cli
