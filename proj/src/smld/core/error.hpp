#pragma once

#include <stdexcept>
#include <string>

namespace smld {

// Error categories map 1:1 onto the process exit codes of the CLI and the
// status codes of the C API: config=2, data/shape=3, numeric=4.
enum class ErrorKind {
  Config = 2,
  Data = 3,
  Numeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_config(const std::string& msg) {
  throw Error(ErrorKind::Config, msg);
}

[[noreturn]] inline void fail_data(const std::string& msg) {
  throw Error(ErrorKind::Data, msg);
}

[[noreturn]] inline void fail_numeric(const std::string& msg) {
  throw Error(ErrorKind::Numeric, msg);
}

}  // namespace smld
