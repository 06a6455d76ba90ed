#pragma once

#include <stdexcept>
#include <cstdio>
#include <string>

namespace fracctl {

/// Invalid problem, mesh or study parameters.
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of a special function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A linear solve missed its residual contract.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double relative_residual, int iterations)
        : std::runtime_error(what + " (relative residual " + format(relative_residual) + " after " +
                             std::to_string(iterations) + " iterations)"),
          relative_residual_(relative_residual),
          iterations_(iterations) {}

    double relative_residual() const noexcept { return relative_residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3e", v);
        return buf;
    }
    double relative_residual_;
    int iterations_;
};

/// An error functional produced a value that cannot be a squared norm.
class InconsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fracctl
