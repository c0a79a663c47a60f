#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace brakeorbit::cli {

// Runs one command line (without the program name). Returns the exit code:
// 0 on success, 1 on usage errors, 2 on numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace brakeorbit::cli
