#pragma once

#include <ostream>
#include <span>
#include <string>

namespace crucible::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRegression = 3;

/// Runs one command line (without the program name). Never throws: typed
/// errors become `error: <Name>: <detail>` on `err` with exit 1, usage
/// errors exit 2, and failed regression verdicts exit 3.
int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace crucible::cli
