#pragma once

#include <iosfwd>

namespace rewardkit {

// Exit codes: 0 success, 1 bad input (config, flags, validation), 2 runtime or
// scoring failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rewardkit
