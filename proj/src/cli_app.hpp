#ifndef TSAD_CLI_APP_HPP
#define TSAD_CLI_APP_HPP

#include <string>
#include <vector>

namespace tsad {

// Runs the command line application on `args` (program name excluded) and
// returns the process exit code: 0 success, 2 usage, 3 validation, 4 data,
// 5 numerical, 6 I/O.
int run_cli(const std::vector<std::string>& args);

} // namespace tsad

#endif
