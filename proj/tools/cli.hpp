#ifndef URGENCY_TOOLS_CLI_HPP_
#define URGENCY_TOOLS_CLI_HPP_

#include <string>
#include <vector>

namespace urgency::cli {

// Runs the command line and returns the process exit code: 0 success,
// 2 configuration error, 3 data error, 4 numeric failure.
int run(const std::vector<std::string>& args);

}  // namespace urgency::cli

#endif  // URGENCY_TOOLS_CLI_HPP_
