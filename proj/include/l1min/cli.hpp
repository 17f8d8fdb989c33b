#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace l1min::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kNotConverged = 1;
inline constexpr int kUsage = 2;

/// Environment variable naming the directory relative output paths resolve against.
inline constexpr const char* kOutputDirEnv = "L1MIN_OUTPUT_DIR";

/// args excludes the program name. Diagnostics go to err, summaries to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace l1min::cli
