#pragma once

#include <stdexcept>
#include <string>

namespace graingraph {

// Error taxonomy shared across the library. The CLI maps these classes onto
// process exit codes: validation failures -> 1, I/O failures -> 2,
// non-finite numerics -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text (missing columns, bad header, unknown schema version).
class FormatError : public Error {
public:
    using Error::Error;
};

// Scan points that do not form a complete rectangular grid with uniform step.
class GeometryError : public Error {
public:
    using Error::Error;
};

// A value violates an operation's preconditions or a type invariant.
class ValueError : public Error {
public:
    using Error::Error;
};

// A record references an id that does not exist.
class ReferenceError : public Error {
public:
    using Error::Error;
};

// Tensor shape mismatch; message carries both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// NaN or Inf produced where finite values are required.
class NumericError : public Error {
public:
    using Error::Error;
};

// API misuse (e.g. backward on a non-scalar, grad check on a stochastic graph).
class UsageError : public Error {
public:
    using Error::Error;
};

// Serialized data violates structural invariants on import.
class ValidationError : public Error {
public:
    using Error::Error;
};

// File system failures.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace graingraph
