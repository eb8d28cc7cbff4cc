#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace mtdc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input. `path()` is a JSON-pointer-like location, e.g. "/nodes/2/p_ref".
class ParseError : public Error {
public:
    ParseError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Well-formed input that violates a model invariant (dangling edge, disconnected graph, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A converter terminal voltage fell below the floor where the injection map is singular.
class DomainError : public Error {
public:
    DomainError(std::string node, double voltage)
        : Error("voltage " + std::to_string(voltage) + " pu at node '" + node + "' is below the floor"),
          node_(std::move(node)), voltage_(voltage) {}
    const std::string& node() const noexcept { return node_; }
    double voltage() const noexcept { return voltage_; }

private:
    std::string node_;
    double voltage_;
};

/// The contraction hypothesis does not hold (alpha >= 1) and the caller did not force the solve.
class CertificationError : public Error {
public:
    CertificationError(const std::string& what, double alpha) : Error(what), alpha_(alpha) {}
    double alpha() const noexcept { return alpha_; }

private:
    double alpha_;
};

/// A fixed-point iterate left the ball around the nominal voltage.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int iteration) : Error(what), iteration_(iteration) {}
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

/// Step size underflow in the stiff integrator.
class StiffnessError : public Error {
public:
    StiffnessError(const std::string& what, double t, Eigen::VectorXd state)
        : Error(what), t_(t), state_(std::move(state)) {}
    double time() const noexcept { return t_; }
    const Eigen::VectorXd& state() const noexcept { return state_; }

private:
    double t_;
    Eigen::VectorXd state_;
};

/// The Newton cross-check did not converge; a test using it is inconclusive.
class OracleFailure : public Error {
public:
    using Error::Error;
};

} // namespace mtdc
