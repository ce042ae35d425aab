#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace procrustes::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  ///< audits failed or a numerical error
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 64;

/// Runs one subcommand; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace procrustes::cli
