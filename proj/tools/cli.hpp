#pragma once

#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace qrt::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kRemoteError = 3,
};

/// Entry point shared by the executable and the tests. `env` replaces the
/// process environment when given.
int run(int argc, const char* const* argv, std::ostream& out = std::cout,
        std::ostream& err = std::cerr,
        const std::optional<std::map<std::string, std::string>>& env = std::nullopt);

}  // namespace qrt::cli
