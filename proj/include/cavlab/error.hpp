#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cavlab {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  DegenerateClass,
  NotPositiveDefinite,
  Degenerate,
  Unsupported,
  Diverged,
  Io,
  Format,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for failures that come from the numbers rather than from the caller's
/// configuration (the CLI maps these to exit code 3).
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cavlab
