// Error taxonomy shared by the library and the CLI.
#pragma once

#include <stdexcept>
#include <string>

namespace spinlab {

// A requested allocation would exceed a configured budget.
class capacity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File missing, malformed, or truncated.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class divergence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Process exit codes. 1 stays reserved for generic failures such as a
// failed numerical check.
enum exit_code : int {
  exit_ok = 0,
  exit_usage = 2,
  exit_io = 3,
  exit_capacity = 4,
  exit_divergence = 5,
};

}  // namespace spinlab
