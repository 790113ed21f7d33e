#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dynblock::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kBadInput = 2,       // malformed config, missing key, empty grid, missing data
  kComputeFailed = 3,  // integrator failure and other numerical errors
  kOutputDir = 4,      // output directory not writable
};

// Full command-line front end. Errors are reported on `err` as
// "dynblock: error[<token>]: <message>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dynblock::cli
