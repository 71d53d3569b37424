#pragma once

#include <string>
#include <vector>

namespace gridcast {

/// Runs one CLI invocation. `args` excludes the program name.
/// Exit codes: 0 success, 1 data/validation error (diagnostic on stderr),
/// 2 usage error (usage text on stderr).
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, const char* const* argv);

} // namespace gridcast
