#pragma once

#include <stdexcept>
#include <string>

namespace kmd {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed user input: bad kernel matrices, invalid k, broken distance
// matrices, unreadable files. The CLI maps these to exit code 2.
class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& what) : Error(what) {}
};

// Statistic cannot be formed: single-class sample, zero variance, kernel
// whose denominator vanishes.
class DegenerateStatisticError : public Error {
 public:
  explicit DegenerateStatisticError(const std::string& what) : Error(what) {}
};

// A quantity that is nonnegative by construction came out materially
// negative, or similar internal consistency failures.
class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what) : Error(what) {}
};

}  // namespace kmd
