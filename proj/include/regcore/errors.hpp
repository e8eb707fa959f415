#pragma once

#include <stdexcept>
#include <string>

namespace regcore {

// Base for every error raised by the library. The CLI maps FormatError and
// ShapeMismatch to exit code 2 and the solver degeneracies to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument value (negative lambda, non-finite coordinate, too few points).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

// Landmark geometry does not determine the requested transform.
class DegenerateConfiguration : public Error {
public:
    using Error::Error;
};

// TPS bordered system is singular (duplicate or collinear control points).
class SingularSystem : public Error {
public:
    using Error::Error;
};

class EmptyMask : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

// Statistical test cannot be evaluated (n < 2 or zero variance).
class DegenerateSample : public Error {
public:
    using Error::Error;
};

// Malformed file or config contents.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace regcore
