#pragma once

#include <ostream>

namespace dosetrend {

/// Entry point shared by the executable and the tests. Returns the process
/// exit code: 0 success, 2 invalid input or configuration, 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dosetrend
