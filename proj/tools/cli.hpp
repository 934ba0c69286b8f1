#pragma once

// The turnprint command line, callable in-process so tests can drive it.

#include <iosfwd>

namespace turnprint::cli {

enum ExitCode : int { kSuccess = 0, kInputError = 2, kConfigError = 3 };

/// Parses argv, runs one subcommand and returns the process exit code.
/// Normal output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace turnprint::cli
