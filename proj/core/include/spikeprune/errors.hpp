#pragma once

#include <stdexcept>
#include <string>

namespace spikeprune {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A documented precondition or invariant was violated by the caller.
struct ContractError : Error {
    using Error::Error;
};

// Bad or inconsistent configuration values.
struct ConfigError : Error {
    using Error::Error;
};

// NaN/Inf reached a computation that must stay finite.
struct NumericsError : Error {
    using Error::Error;
};

// File format or filesystem failure.
struct IoError : Error {
    using Error::Error;
};

// A pipeline stage ran before the artifacts it consumes were produced.
struct MissingArtifactError : Error {
    using Error::Error;
};

// Regression design matrix is singular (e.g. all abscissae identical).
struct DegenerateFitError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

}  // namespace spikeprune
