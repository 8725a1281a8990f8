#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace oamtomo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Runs one command line (program name first) and returns the exit code:
/// 0 success, 2 configuration or usage error, 3 runtime error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace oamtomo::cli
