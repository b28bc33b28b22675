#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hif::cli {

enum ExitCode { kConverged = 0, kInputError = 1, kNotConverged = 2 };

// Runs the command line driver. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hif::cli
