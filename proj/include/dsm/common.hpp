#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dsm {

inline constexpr const char* kVersion = "0.1.0";

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Bad run configuration: unknown names, inconsistent shapes, invalid params.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A value outside an operation's domain (invalid index, non-simplex input, ...).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: solver breakdown, divergence, non-finite intermediate.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// A required input artifact (model file, config file) does not exist.
struct MissingArtifactError : std::runtime_error {
    explicit MissingArtifactError(const std::string& what) : std::runtime_error(what) {}
};

inline bool is_probability_vector(const Vec& p, double tol = 1e-12) {
    if (p.size() == 0) return false;
    if (p.minCoeff() < -tol) return false;
    return std::abs(p.sum() - 1.0) <= tol;
}

inline void require_simplex(const Vec& p, const char* what, double tol = 1e-8) {
    if (!is_probability_vector(p, tol))
        throw DomainError(std::string(what) + ": not a probability vector");
}

}  // namespace dsm
