#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mcs::cli {

// Exit statuses shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1; // analysis or validation failure
inline constexpr int kExitUsage = 2;   // usage or input error

// Runs the command line `args` (without the program name). Reports go to
// files under --out; the terminal summary goes to `out`, problems to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mcs::cli
