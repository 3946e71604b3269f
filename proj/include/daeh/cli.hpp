#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace daeh::cli {

/// Runs the command line tool.  Exit codes: 0 success, 1 numerical failure,
/// 2 usage or precondition error.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace daeh::cli
