#pragma once

#include <iosfwd>

namespace maddr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitScenario = 2;
inline constexpr int kExitSimulation = 3;

/// Entry point for the `maddr` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace maddr
