#pragma once

#include <string>
#include <vector>

namespace nphisd {

// Full command-line front end, callable in-process for testing. `args` are
// the tokens after the program name. Returns the process exit code:
// 0 success, 1 usage/config/internal error, 2 non-convergence.
int run_cli(std::vector<std::string> args);

} // namespace nphisd
