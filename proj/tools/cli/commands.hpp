#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace schro::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,      // a check failed under --strict
  kBadArguments = 2,     // unknown subcommand, bad flag, missing file
  kSchemaViolation = 3,  // config file does not match the schema
  kRefused = 4,          // the library rejected the inputs (e.g. no spectral gap)
};

/// Parses args (without the program name) and runs the subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace schro::cli
