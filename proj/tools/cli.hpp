#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clayer::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsageOrIo = 1,
  kUnsatisfiable = 2,
  kBlowup = 3,
  kPostCheck = 4,
};

/// Runs the `clayer` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clayer::cli
