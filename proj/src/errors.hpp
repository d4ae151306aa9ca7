#pragma once

#include <stdexcept>
#include <string>

namespace packsim {

// Base for everything thrown by this library, so callers (and the C API
// shim) can catch one type and branch on the concrete class for a code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad argument to a library call (NaN flux, non-positive node count, ...).
struct InvalidInputError : Error {
    using Error::Error;
};

// Malformed or out-of-range configuration. Message names the field path.
struct ConfigError : Error {
    using Error::Error;
};

// Numerical trouble: unstable time step, non-finite state.
struct StabilityError : Error {
    using Error::Error;
};

// The scheduler cannot satisfy its constraints and the pack voltage floor
// was violated for longer than the configured grace period.
struct InfeasibilityError : Error {
    using Error::Error;
};

}  // namespace packsim
