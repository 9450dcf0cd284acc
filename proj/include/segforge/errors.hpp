#pragma once

#include <stdexcept>
#include <string>

namespace segforge {

/// Input violates a documented precondition or invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be parsed under its declared format.
class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value or gradient became NaN/Inf.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace segforge
