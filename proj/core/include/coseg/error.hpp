#pragma once

#include <stdexcept>
#include <string>

namespace coseg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition or shape violation on an API argument.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity appeared during model evaluation or training.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent on-disk data (PGM, manifest, checkpoint, config).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure: missing input, unwritable output, existing output.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace coseg
