#pragma once

#include <string>
#include <vector>

namespace rejuv::cli {

// Entry point shared by the binary and the tests. Exit codes: 0 success,
// 1 computation failure, 2 configuration error.
int run_command(const std::vector<std::string>& argv);

}  // namespace rejuv::cli
