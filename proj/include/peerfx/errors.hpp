#pragma once

#include <stdexcept>
#include <string>

namespace peerfx {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file: missing column, non-numeric cell, bad enum token.
struct LoadError : Error {
    using Error::Error;
};

// Referential break or violated dataset invariant.
struct IntegrityError : Error {
    using Error::Error;
};

// Filtering removed every course or participant.
struct EmptySampleError : Error {
    using Error::Error;
};

// Infeasible generator or run configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Estimation failure: separation, non-convergence, singular system.
struct NumericalError : Error {
    using Error::Error;
};

}  // namespace peerfx
