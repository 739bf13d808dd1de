#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eaf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Runs one command line (args excludes the program name). Human output goes
/// to `out`; failures print a single `error ...` line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const char* version();

}  // namespace eaf::cli
