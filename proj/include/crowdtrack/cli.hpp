#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crowdtrack::cli {

/// Entry point shared by the binary and the tests. Returns the process exit
/// code; reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crowdtrack::cli
