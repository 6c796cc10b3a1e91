#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qgibbs::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kRuntimeError = 3,
  kIoError = 4,
};

inline constexpr const char* kVersion = "0.1.0";

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace qgibbs::cli
