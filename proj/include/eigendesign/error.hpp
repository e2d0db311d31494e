#pragma once

#include <stdexcept>
#include <string>

namespace eigendesign {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on the inputs of an operation does not hold.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An iterative or root-finding procedure failed to converge.
class SolverError : public Error {
public:
    using Error::Error;
};

/// The trial eigenvalue lies beyond the first zero of the interior radial profile.
class PastPrincipalBranch : public SolverError {
public:
    using SolverError::SolverError;
};

class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace eigendesign
