#pragma once

#include <stdexcept>
#include <string>

namespace fracsmooth {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A quadrature or iterative scheme did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Every tracking error is zero, so no rate can be fitted.
class ExactHedge : public Error {
 public:
  using Error::Error;
};

/// The decay curve vanishes identically (constant payoff).
class InfiniteSmoothness : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace fracsmooth
