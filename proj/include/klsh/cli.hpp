#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace klsh {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point shared by the `klsh` executable and the tests. args[0] is the
/// program name. Human-readable messages go to `diag`.
int run_cli(const std::vector<std::string>& args, std::ostream& diag);

}  // namespace klsh
