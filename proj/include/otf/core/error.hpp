#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace otf {

enum class ErrorKind {
  invalid_argument,
  invalid_state,
  out_of_order,
  not_found,
  conflict,
  parse,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::invalid_state: return "invalid_state";
    case ErrorKind::out_of_order: return "out_of_order";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

// Every failure in the library is reported as an otf::Error. `reason` is a
// short machine-readable code (e.g. "no_end_session"), `what()` carries the
// human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string reason, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? reason : reason + ": " + detail),
        kind_(kind),
        reason_(std::move(reason)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  ErrorKind kind_;
  std::string reason_;
};

}  // namespace otf
