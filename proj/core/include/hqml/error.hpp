#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hqml {

/// Failure categories shared by every module. The CLI maps these onto exit
/// codes and the `--json` error payload.
enum class ErrorKind {
  Size,
  Wire,
  Param,
  Arity,
  Shape,
  Label,
  Vocab,
  Input,
  Parse,
  Differentiation,
  Divergence,
  DegenerateData,
  Config,
  Normalization,
  Split,
  Comparability,
  Io,
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

}  // namespace hqml
