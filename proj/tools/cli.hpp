#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gld::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kRuntimeError = 3 };

/// Runs one invocation (argv[0] is the program name). Diagnostics go to `err`,
/// human-readable results (ingest table, summaries) to `out`.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace gld::cli
