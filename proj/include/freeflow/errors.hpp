#pragma once

#include <stdexcept>
#include <string>

namespace freeflow {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// A file or external input could not be read or parsed.
class InputError : public Error {
public:
  using Error::Error;
};

/// The operation is not defined for this kind of input.
class UnsupportedError : public Error {
public:
  using Error::Error;
};

/// A value-type invariant (ordering, finiteness, shape) does not hold.
class InvariantError : public Error {
public:
  using Error::Error;
};

/// Evaluation at a pole.
class SingularityError : public Error {
public:
  using Error::Error;
};

/// An iterative method failed to reach its tolerance.
class NumericalError : public Error {
public:
  using Error::Error;
};

namespace detail {
[[noreturn]] void throw_domain(const std::string& where, const std::string& what);
}

}  // namespace freeflow
