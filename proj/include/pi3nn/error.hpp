#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pi3nn {

/// Failure categories surfaced by the library. The CLI maps them onto exit
/// codes and prints the category name as a machine-parsable token.
enum class ErrorKind {
  kArgument,
  kConfig,
  kShape,
  kData,
  kNormalization,
  kIo,
  kDivergence,
  kTie,
  kInfeasibleGamma,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace pi3nn
