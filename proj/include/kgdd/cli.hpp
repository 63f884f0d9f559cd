#pragma once

#include <iosfwd>

namespace kgdd {

// Exit codes of the command-line tool.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 1;
inline constexpr int exit_data = 2;
inline constexpr int exit_runtime = 3;

/// Entry point of the `kgdd` tool. Streams are injectable so that the
/// interactive `label` command can be scripted.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace kgdd
