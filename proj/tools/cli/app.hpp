#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace shapespline::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kSolverFailure = 3 };

/// Runs one subcommand (fit, search-changepoints, diagnose-halfwidth,
/// oracle-check, simulate). args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shapespline::cli
