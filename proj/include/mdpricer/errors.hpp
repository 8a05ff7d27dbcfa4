#pragma once

#include <stdexcept>
#include <string>

namespace mdpricer {

// Error taxonomy. The CLI maps these onto exit codes:
// input/config problems -> 1, infeasible instances -> 2, everything else -> 3.

// Bad hyperparameters, malformed config files, unknown config keys.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data: unknown ids, bad rows, non-finite values.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Vector/design dimension disagreements between model state and inputs.
struct DimensionError : DataError {
    using DataError::DataError;
};

// Empty feasible action set where one is required.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The exact joint solver refusing an instance beyond its state-space cap.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mdpricer
