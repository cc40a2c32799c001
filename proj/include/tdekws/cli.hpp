#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tdekws {

// Runs the command line `args` (without the program name). Returns the
// process exit code: 0 success, 1 runtime failure, 2 usage error. Failures
// print one line `tdekws-error<TAB>kind<TAB>message` to `err`.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace tdekws
