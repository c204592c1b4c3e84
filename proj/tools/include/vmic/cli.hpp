#pragma once

// `vmic` command line. Exit codes: 0 success, 1 unexpected failure,
// 2 configuration or usage error, 3 validity (geometry/parameter) error,
// 4 I/O error (including a port that cannot be bound).

#include <iosfwd>

namespace vmic {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_validity = 3,
  exit_io = 4
};

/// Runs one command. Normal output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

} // namespace vmic
