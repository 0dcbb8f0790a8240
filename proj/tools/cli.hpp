#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nphmm::cli {

/// Runs one subcommand. args excludes the program name. Failures print a JSON
/// error record on `err` and return a nonzero status.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nphmm::cli
