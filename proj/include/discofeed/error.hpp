#pragma once

#include <stdexcept>
#include <string>

namespace discofeed {

// Mirrors df_status in the C API so codes survive the boundary unchanged.
enum class ErrorCode {
  invalid_argument = 1,
  io = 2,
  parse = 3,
  not_found = 4,
  not_ready = 5,
  empty_input = 6,
  dimension_mismatch = 7,
  internal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace discofeed
