#pragma once

#include <stdexcept>
#include <string>

namespace catmap {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold (shape, range, tolerance).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A computed object failed one of its postcondition checks.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

/// An iterative routine hit its iteration cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A request would allocate more than the configured guard permits.
class MemoryGuardError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

} // namespace detail
} // namespace catmap
