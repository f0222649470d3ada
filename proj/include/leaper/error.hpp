#pragma once

#include <stdexcept>
#include <string>

namespace leaper {

enum class ErrorKind { Validation, Io, Internal };

// Every failure the core raises is a leaper::Error. The C API maps the kind
// onto its status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(const std::string& what) {
  throw Error(ErrorKind::Validation, what);
}

[[noreturn]] inline void fail_io(const std::string& what) {
  throw Error(ErrorKind::Io, what);
}

}  // namespace leaper
