#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epb {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_numerical = 3;

/// Command-line driver. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace epb
