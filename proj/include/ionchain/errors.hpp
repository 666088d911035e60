#pragma once

#include <stdexcept>
#include <string>

namespace ionchain {

/// Base class for failures of a numerical routine (as opposed to bad input,
/// which is reported with std::invalid_argument).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newton iteration for the axial equilibrium did not reach tolerance.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double residual)
        : NumericalError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// The mode matrix has a non-positive eigenvalue: the linear chain is not a
/// stable configuration for these parameters.
class UnstableCrystalError : public NumericalError {
public:
    explicit UnstableCrystalError(double lambda)
        : NumericalError("unstable crystal: mode eigenvalue " + std::to_string(lambda) + " <= 0"),
          lambda_(lambda) {}
    double eigenvalue() const noexcept { return lambda_; }

private:
    double lambda_;
};

/// Eigenvectors at consecutive sweep steps could not be matched.
class AlignmentError : public NumericalError {
public:
    AlignmentError(std::size_t step, double overlap)
        : NumericalError("eigenvector alignment failed at step " + std::to_string(step) + " (best overlap " +
                         std::to_string(overlap) + "); use a finer time grid"),
          step_(step), overlap_(overlap) {}
    std::size_t step() const noexcept { return step_; }
    double overlap() const noexcept { return overlap_; }

private:
    std::size_t step_;
    double overlap_;
};

/// A quantity that must hold by construction (symmetry, non-negative
/// variance) was violated beyond rounding slack.
class ConsistencyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace ionchain
