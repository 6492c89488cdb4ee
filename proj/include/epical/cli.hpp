#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epical::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Run one `epical` command. `args` excludes the program name.
/// Option precedence: command line > EPICAL_SEED (seed only) > --config file > defaults.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace epical::cli
