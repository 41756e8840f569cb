#pragma once

#include <string>
#include <vector>

namespace qaforge {

// Full command-line entry point. Returns the process exit status:
// 0 success, 1 validation/configuration error, 2 endpoint failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace qaforge
