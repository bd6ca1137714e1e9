#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace langmix {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// caller broke a precondition (dimension mismatch, uninitialised state)
struct ContractViolation : Error {
    using Error::Error;
};

// parameter outside the admissible range of a formula
struct DomainError : Error {
    using Error::Error;
};

struct UnsupportedOperation : Error {
    using Error::Error;
};

// a theorem hypothesis does not hold for the requested run (exit 3)
struct HypothesisViolation : Error {
    using Error::Error;
};

// malformed or inconsistent configuration (exit 2)
struct ConfigError : Error {
    using Error::Error;
};

} // namespace langmix
