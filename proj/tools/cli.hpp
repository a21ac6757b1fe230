// Command line front end. run() never calls exit() so it can be driven from tests.
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pidkit::cli {

enum ExitCode { kOk = 0, kNegative = 1, kUsage = 2, kNumerical = 3 };

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pidkit::cli
