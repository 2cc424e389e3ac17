#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace xcfo {

using cd = std::complex<double>;
using cvec = std::vector<cd>;

inline constexpr double kPi = std::numbers::pi;

// Error hierarchy. The CLI maps each family onto its exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid argument or violated precondition.
struct ParameterError : Error {
    using Error::Error;
};

// Bad or unknown configuration key/value (exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

// Numerically void input: vanishing correlation, rank-deficient design (exit code 3).
struct DegenerateError : Error {
    using Error::Error;
};

struct RankError : DegenerateError {
    using DegenerateError::DegenerateError;
};

struct IoError : Error {
    using Error::Error;
};

// Magnitudes below this are treated as numerically zero by the CFO estimators.
inline constexpr double kDegenerateMagnitude = 1e-15;

inline double wrap_phase(double phi) {
    return std::remainder(phi, 2.0 * kPi);
}

}  // namespace xcfo
