#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccp::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kInternalError = 3,
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs one `ccp` invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ccp::cli
