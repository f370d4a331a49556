#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fleetsim {

enum class ErrorKind {
  invalid_argument,  // precondition violated by a caller
  config,            // scenario config failed validation
  io,                // file missing / unreadable / unwritable
  schema,            // input file present but malformed
  layout,            // checkpoint layout does not match the scenario
  usage,             // command-line misuse
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fleetsim
