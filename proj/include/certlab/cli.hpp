#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace certlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitVerifyFailed = 2;

std::string version();

/// Runs one subcommand. `args` excludes the program name. Results go to
/// `out`, diagnostics and usage text to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace certlab::cli
