#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace prqkd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitRejected = 3;

// Subcommands: session, scan, verify-uniformity, density. `args` excludes
// the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prqkd
