#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ssvep::cli {

// Runs one command line (without the program name) and returns the process
// exit code. Diagnostics go to `err`, progress and listings to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssvep::cli
