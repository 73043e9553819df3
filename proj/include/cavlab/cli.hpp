#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cavlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one `cavlab` invocation. `args` excludes the program name. A JSON
/// summary goes to `out`; failures print a JSON error object to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cavlab::cli
