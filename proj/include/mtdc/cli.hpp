#pragma once

#include <ostream>

namespace mtdc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;     // usage, I/O, parse or validation problem
inline constexpr int kExitNegative = 2;  // ran fine, but the grid did not certify / settle / reduce

/// Entry point of the `mtdc` tool. Subcommands: powerflow, stability, simulate,
/// mmc-verify, report.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mtdc::cli
