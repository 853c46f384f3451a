#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cavity {

/// Parses `args` (without the program name), dispatches the subcommand and
/// returns its exit code. Usage errors print help and return 2.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cavity
