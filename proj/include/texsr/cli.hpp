#pragma once

#include <string>
#include <vector>

namespace texsr::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kDataError = 2,
    kNumericalFailure = 3,
};

struct CommandResult
{
    int exit_code = kSuccess;
    /// Summary lines for standard output (one per artifact or metric).
    std::vector<std::string> output;
    /// Diagnostics for standard error.
    std::vector<std::string> log;
    /// Files written by the command.
    std::vector<std::string> artifacts;
};

/// Runs one `texsr` subcommand. argv[0] is the program name.
CommandResult run_command(const std::vector<std::string>& argv);

} // namespace texsr::cli
