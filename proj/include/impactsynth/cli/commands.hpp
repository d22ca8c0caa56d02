#pragma once

#include <ostream>
#include <span>
#include <string>

namespace impactsynth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Runs one command line (args[0] is the program name). Normal output goes to
/// `out`, diagnostics and warnings to `err`. Returns the process exit code.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

int run_cli(int argc, const char* const* argv);

}  // namespace impactsynth::cli
