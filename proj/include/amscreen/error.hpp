#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace amscreen {

enum class ErrorKind {
  io,
  parse,
  duplicate_id,
  not_found,
  conflict,
  invalid_argument,
  training,
  fetch,
  protocol,
  unavailable,
  empty_after_clean,
  persistence,
};

std::string_view to_string(ErrorKind kind);

// Every failure the library reports on purpose is an Error. `detail` carries
// machine-oriented context (the offending id, a raw remote payload, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string detail = {})
      : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace amscreen
