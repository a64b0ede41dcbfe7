#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace langtrack::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kInternalError = 1, kUsageError = 2 };

std::string_view version() noexcept;

/// Runs the command line (args excludes the program name). Regular output goes to out,
/// diagnostics and the resolved-configuration log line to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace langtrack::cli
