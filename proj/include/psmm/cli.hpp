#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace psmm::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kNumericalError = 3 };

/// Runs one CLI invocation; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace psmm::cli
