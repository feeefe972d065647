#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gaussfit {

enum ExitCode { kExitPass = 0, kExitCheckFailure = 1, kExitUsage = 2 };

/// Entry point of the command-line driver. `args` excludes the program name.
/// Subcommands: stats, free-energy, overlap, bounds, verify.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gaussfit
