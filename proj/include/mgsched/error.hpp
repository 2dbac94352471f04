#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mgsched {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Validation,
  Io,
  NotConverged,
  Singular,
  Diverged,
  Infeasible,
};

// Single exception type for the library; the C API maps `code()` onto its
// status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::vector<std::string> details = {})
      : std::runtime_error(what), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

}  // namespace mgsched
