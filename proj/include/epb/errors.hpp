#pragma once

#include <stdexcept>
#include <string>

namespace epb {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// bad user input; maps to exit code 2
struct ConfigError : Error {
    using Error::Error;
};

struct UnknownFigure : ConfigError {
    using ConfigError::ConfigError;
};

struct BasisMismatch : Error {
    using Error::Error;
};

struct DimensionCap : Error {
    using Error::Error;
};

// numerical failures; map to exit code 3
struct NumericalError : Error {
    using Error::Error;
};

struct HermitianityViolation : NumericalError {
    using NumericalError::NumericalError;
};

struct NonConvergence : NumericalError {
    NonConvergence(const std::string& what, double residual)
        : NumericalError(what), residual(residual) {}
    double residual;
};

struct StepUnstable : NumericalError {
    using NumericalError::NumericalError;
};

struct TrackingLost : NumericalError {
    TrackingLost(const std::string& what, double beta) : NumericalError(what), beta(beta) {}
    double beta;
};

} // namespace epb
