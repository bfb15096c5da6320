#pragma once

#include <stdexcept>
#include <string>

namespace streetlight {

// Bad or unreadable input: documents, configs, arguments. CLI maps this to exit 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A check over valid inputs failed (conflicting logs, parity mismatch). CLI exit 3.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace streetlight
