#pragma once

#include <stdexcept>
#include <string>

namespace affsieve {

/// Raised when an operation's precondition or an input format is violated.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a configured budget (element cap, modulus size, moduli count)
/// is exhausted. `reached()` carries how far the computation got: the radius
/// for balls, the element count for finite images.
class ResourceExhausted : public std::runtime_error {
 public:
  ResourceExhausted(const std::string& what, long long reached)
      : std::runtime_error(what), reached_(reached) {}

  long long reached() const noexcept { return reached_; }

 private:
  long long reached_;
};

}  // namespace affsieve
