#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace pms::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;     // user input or configuration
inline constexpr int kExitNumerical = 3; // numerical breakdown
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInterrupted = 130;

/// Parses `args` (program name first) and runs the selected subcommand.
/// Errors are reported on `err` and mapped to the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Set by the SIGINT handler; estimate stops at the next sweep boundary.
std::atomic<bool>& interrupt_flag();
void install_interrupt_handler();

} // namespace pms::cli
