#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace conet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (vector length vs. vertex count, non-square matrix, ...).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An input violates a documented precondition (antisymmetry, positivity, regime, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Two trajectories cannot be compared because their time grids differ.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Fewer usable data points than a fit requires.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Fixed-point iteration stopped at its iteration cap.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, std::vector<double> gaps)
        : Error(what), gaps_(std::move(gaps)) {}

    const std::vector<double>& gaps() const noexcept { return gaps_; }

private:
    std::vector<double> gaps_;
};

}  // namespace conet
