#pragma once

#include <iosfwd>

namespace fct::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailed = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the fct binary: parses argv, runs one subcommand and
// returns the process exit code. Diagnostics go to `err`, reports to `out`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fct::cli
