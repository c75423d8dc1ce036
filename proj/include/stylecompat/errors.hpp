#pragma once

#include <stdexcept>
#include <string>

namespace stylecompat {

// Error taxonomy used across the library. Each maps onto a CLI exit code:
// usage/config -> 1, data -> 2, numerics -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor or matrix dimensions incompatible for the requested operation.
struct ShapeError : Error {
    using Error::Error;
};

// Math domain violation (log of non-positive, sqrt of negative).
struct DomainError : Error {
    using Error::Error;
};

// API precondition violated (non-scalar backward root, negative distance).
struct ContractError : Error {
    using Error::Error;
};

// NaN or Inf encountered where finite values are required.
struct NumericsError : Error {
    using Error::Error;
};

// Invalid configuration value or combination.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed or unacceptable input data.
struct InputError : Error {
    using Error::Error;
};

// Pair or batch construction cannot satisfy its constraints.
struct SamplingError : Error {
    using Error::Error;
};

// Metric undefined for the given inputs (e.g. single-class AUC).
struct MetricError : Error {
    using Error::Error;
};

// File missing, unreadable, or unwritable.
struct IoError : Error {
    using Error::Error;
};

}  // namespace stylecompat
