#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace skeldiff::cli {

/// Exit codes: 0 success, 1 usage error, 2 invalid input data, 3 other failure.
enum ExitCode : int { kOk = 0, kUsage = 1, kBadInput = 2, kFailure = 3 };

/// Runs one command. `args` excludes the program name. Results go to files
/// under --out; `out` receives short human-readable summaries and `err`
/// receives a single-line JSON object on failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace skeldiff::cli
