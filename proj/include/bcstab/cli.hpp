#pragma once

#include <iosfwd>

namespace bcstab {

/// Exit codes shared by the subcommands.
enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,
    kExitInvalid = 2,
    kExitSolveFailed = 3,
};

/// Entry point of the `bcstab` command line tool (solve, verify, ssc, sweep, mesh-dump).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace bcstab
