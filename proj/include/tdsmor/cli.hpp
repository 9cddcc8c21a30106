#pragma once

namespace tdsmor::cli {

/// Exit codes of the tdsmor tool.
enum ExitCode : int {
  ok = 0,
  selftest_failed = 1,
  argument_error = 2,
  io_error = 3,
  numerical_error = 4,
  capacity_error = 5,
};

int run(int argc, char** argv);

}  // namespace tdsmor::cli
