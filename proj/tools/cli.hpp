#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace permdrift::cli {

/// Exit codes: 0 success, 1 data error, 2 usage error.
inline constexpr int kOk = 0;
inline constexpr int kDataError = 1;
inline constexpr int kUsageError = 2;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace permdrift::cli
