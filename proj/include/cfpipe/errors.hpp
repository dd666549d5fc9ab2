#pragma once

#include <stdexcept>
#include <string>

namespace cfpipe {

// Base class for all pipeline errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An operation precondition was violated (bad series, mismatched grids, ...).
struct InvalidInputError : Error {
    using Error::Error;
};

// A file could not be read or written.
struct IoError : Error {
    using Error::Error;
};

// Scene-file format violations: bad header, too many malformed lines.
struct FormatError : Error {
    using Error::Error;
};

// A linear solve or filter update failed numerically.
struct NumericalError : Error {
    using Error::Error;
};

// Invalid CLI or config-file values.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace cfpipe
