#pragma once

#include <ostream>

namespace vpidm::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  ///< verification failure or numerical failure
  kUsage = 2,
  kIo = 3,
};

/// Entry point shared by the `vpidm` executable and the tests. Log lines go
/// to `log`.
int run(int argc, const char* const* argv, std::ostream& log);

}  // namespace vpidm::cli
