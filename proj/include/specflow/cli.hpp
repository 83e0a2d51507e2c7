#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace specflow {

// Runs one subcommand; args excludes the program name. Returns the process
// exit code. Failures print a single line "error: <CLASS>: <detail>" to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace specflow
