#ifndef ECOSPEED_ERROR_HPP
#define ECOSPEED_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ecospeed {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed scenario text or schema violation (CLI exit code 2).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Violated numerical precondition: range, CFL, infeasible policy, grid mismatch (CLI exit code 1).
class DomainError : public Error {
public:
    using Error::Error;
};

/// I/O failure (CLI exit code 2).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace ecospeed

#endif // ECOSPEED_ERROR_HPP
