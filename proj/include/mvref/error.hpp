#pragma once

#include <stdexcept>
#include <string>

namespace mvref {

// Bad caller input: shapes, factors, malformed arguments.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable or malformed file content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal contract broken at runtime (non-finite tensor, unnormalized maps).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

#define MVREF_REQUIRE(cond, msg)                  \
  do {                                            \
    if (!(cond)) throw ::mvref::InvalidArgument(msg); \
  } while (0)

}  // namespace mvref
