#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace wdro {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Bad arguments: dimension mismatches, out-of-domain parameters, invalid settings.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The classifier direction has zero variance under the feature covariance.
class DegenerateDirection : public InputError {
public:
    using InputError::InputError;
};

/// An iterative solver exhausted its budget. Carries the last residual or
/// gradient norm it reached.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// A solver failure inside a sweep, tagged with the tradeoff weight it occurred at.
class SweepError : public SolverError {
public:
    SweepError(const std::string& what, double lambda, double last_residual)
        : SolverError(what, last_residual), lambda_(lambda) {}

    double lambda() const noexcept { return lambda_; }

private:
    double lambda_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InputError(message);
}

}  // namespace wdro
