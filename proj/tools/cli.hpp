#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace selcov::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kNumerical = 3,
  kValidation = 4,
};

/// Runs the command line `args` (without the program name). Normal output
/// goes to `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// printf("%.12g") of x, the CSV number format.
std::string format_number(double x);

}  // namespace selcov::cli
