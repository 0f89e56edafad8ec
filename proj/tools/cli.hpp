#pragma once

#include <iosfwd>

namespace lc2::cli {

// Exit codes: 0 success, 2 usage, 3 data format, 4 numerical failure, 1 anything else.
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lc2::cli
