#pragma once

#include <iosfwd>

namespace wicksell {

/// Exit codes of the command line tool.
enum ExitCode : int
{
  exit_ok = 0,
  exit_usage = 2,   ///< bad flags or configuration
  exit_runtime = 3, ///< numerical or I/O failure while running
};

/// Entry point of the `wicksell` tool: sample | estimate | limits | reproduce.
/// Results go to `out`, diagnostics and "error[<id>]: ..." lines to `err`.
/// The environment variable WICKSELL_SEED takes precedence over --seed.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace wicksell
