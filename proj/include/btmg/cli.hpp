#pragma once

#include <string>
#include <vector>

namespace btmg {

// Runs one CLI stage from argv-style arguments (program name excluded).
// Returns 0 on success, 1 on usage errors, 2 on runtime failures.
int cli_dispatch(std::vector<std::string> args);

}  // namespace btmg
