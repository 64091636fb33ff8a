#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace slq {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kExitOk = 0, kExitAssertion = 1, kExitConfig = 2 };

/// Entry point of the slqlab tool. `args` excludes the program name.
/// Returns 0 on success, 1 when a verification assertion fails and 2 on a
/// configuration or usage error (one diagnostic line on `err`).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace slq
