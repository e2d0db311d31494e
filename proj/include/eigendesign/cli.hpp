#pragma once

// Command-line front end: `eigendesign <command> [--flag value]...`.

#include <ostream>
#include <string>
#include <vector>

namespace eigendesign {

/// Exit statuses of run_cli.
enum ExitStatus { exit_ok = 0, exit_usage = 1, exit_solver = 2 };

/// Parses args (without the program name), runs the command and writes its
/// artifacts. Human-readable output goes to out, diagnostics to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eigendesign
