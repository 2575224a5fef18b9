#ifndef TEMPANEL_ERRORS_HPP
#define TEMPANEL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tempanel {

/// Bad input data, schema, or configuration. CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure while estimating (rank, dof, convergence, sample size).
/// CLI maps this to exit code 3.
class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Alternating projections hit the iteration cap.
class ConvergenceError : public EstimationError {
public:
    ConvergenceError(const std::string& msg, double last_residual)
        : EstimationError(msg), last_residual_(last_residual) {}
    double last_residual() const { return last_residual_; }

private:
    double last_residual_;
};

}  // namespace tempanel

#endif
