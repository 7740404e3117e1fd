#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mns::cli {

/// Exit codes of the `mns` tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
};

inline constexpr const char* kRunManifest = "run_manifest.json";

/// Runs one invocation of the tool. `args` excludes the program name.
/// Errors are reported on `err` and mapped to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace mns::cli
