#pragma once

// Command-line surface: solve, branch, sweep, diagnose, ineqlab, emit-plots.

#include <ostream>
#include <string>
#include <vector>

namespace kgm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // nonconvergence, unconverged output, I/O
inline constexpr int kExitInvalid = 2;  // bad arguments, config or record

/// `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kgm
