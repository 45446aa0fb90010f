#pragma once

#include <stdexcept>
#include <string>

namespace lacuna {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A request needs more cells (or more frequencies) than the grid provides.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// A numeric parameter lies outside its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A structural precondition on a bitile collection does not hold
/// (non-convex set, bitile outside the lacunary family, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Malformed CSV / JSON input or an I/O failure.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A check that holds by construction failed; indicates a bug.
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace lacuna
