#pragma once

namespace sohot::cli {

/// Full command-line entry point (subcommands: run, compare, transparency).
/// Returns the process exit status: 0 iff all requested outputs were written.
int run_cli(int argc, const char* const* argv);

}  // namespace sohot::cli
