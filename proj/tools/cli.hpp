#ifndef HZMGP_TOOLS_CLI_HPP
#define HZMGP_TOOLS_CLI_HPP

#include <string>
#include <vector>

namespace hzmgp::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidInput = 2,
  kSamplerFailure = 3,
  kDiagnosticsFailure = 4,
};

/// Runs the command line `hzmgp <args...>` and returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace hzmgp::cli

#endif  // HZMGP_TOOLS_CLI_HPP
