#pragma once

#include <string>
#include <vector>

namespace poac::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv and runs one subcommand. Never throws.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args excludes the program name

}  // namespace poac::cli
