#pragma once

#include <stdexcept>
#include <string>

namespace camid {

// Base class for all library errors. The CLI maps subclasses onto exit
// codes (see tools/): data/format problems -> 3, configuration -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File could not be opened/read/written.
class IoError : public Error {
public:
    using Error::Error;
};

// File opened but its contents do not match the expected format.
class FormatError : public Error {
public:
    using Error::Error;
};

// Raster shapes incompatible with the requested operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid in-memory arguments (empty lists, mismatched lengths, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Operation not valid for the object's current state.
class StateError : public Error {
public:
    using Error::Error;
};

// A companion file that should exist was not found.
class LookupError : public Error {
public:
    using Error::Error;
};

// Dataset / evaluation-condition configuration problems.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Numerically degenerate input (zero-norm crop, ...).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// Classifier training impossible on the given data.
class TrainingError : public Error {
public:
    using Error::Error;
};

// CLI usage problems (bad flag combinations, no candidates, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace camid
