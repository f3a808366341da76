#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hftx {

/// Base for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input (catalog or config file).
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A record that parsed fine but violates a domain invariant.
class InvariantError : public Error {
public:
    InvariantError(std::string record, std::string field, const std::string& what)
        : Error(record + "." + field + ": " + what),
          record_(std::move(record)), field_(std::move(field)) {}

    const std::string& record() const noexcept { return record_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string record_;
    std::string field_;
};

/// The requested design cannot be realized with the given inputs.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

class NonConvergenceError : public SolverError {
public:
    NonConvergenceError(int iterations, double residual)
        : SolverError("no convergence after " + std::to_string(iterations) +
                      " iterations (last residual " + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}

    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

class SingularJacobianError : public SolverError {
public:
    SingularJacobianError() : SolverError("singular Jacobian in the nodal solve") {}
};

/// Bad or unknown configuration keys, missing files, bad flags.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace hftx
