#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace plantscan::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidConfig = 2,
  kDataError = 3,
  kCorruptModel = 4,
  kMissingMask = 5,
};

/// Entry point behind the `plantscan` executable. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace plantscan::cli
