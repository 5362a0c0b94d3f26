#pragma once

#include <iosfwd>

namespace botarms {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the botarms tool: subcommands synth, detect, attack, eval,
// sweep and export. Returns 0 on success, 1 on runtime failure and 2 on usage
// or configuration errors.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace botarms
