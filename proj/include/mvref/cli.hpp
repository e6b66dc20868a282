#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mvref::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitInternal = 3;

// Entry point of the mvref tool. Results go to `out`, JSON-lines logs and the
// single-line error record to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mvref::cli
