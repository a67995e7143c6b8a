#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gcnstab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitDiverged = 2;

/// Runs one subcommand. `args` excludes the program name. Results go to `--out`
/// (with a manifest beside it) or to `out` when no path is given; diagnostics go
/// to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gcnstab::cli
