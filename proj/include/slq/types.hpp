#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slq {

// Desk-scale problems only. Fixed maximum extents keep every matrix on the
// stack, which matters inside the per-path simulation loop.
inline constexpr int kMaxDim = 8;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure raised by the library derives from Error so
// the CLI can map it onto an exit code.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (e.g. t outside [0, T]).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inconsistent matrix shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or violated solver precondition.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The control Hessian N + sum D'KD lost positivity.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, double eigenvalue)
        : Error(what), eigenvalue_(eigenvalue) {}
    [[nodiscard]] double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

/// A Riccati iterate left the PSD cone by more than the clamp tolerance.
class BlowUpError : public Error {
public:
    using Error::Error;
};

/// A simulated state became non-finite.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t path, std::size_t step)
        : Error(what), path_(path), step_(step) {}
    [[nodiscard]] std::size_t path() const noexcept { return path_; }
    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t path_;
    std::size_t step_;
};

inline Matrix symmetrize(const Matrix& x) { return (x + x.transpose()) * 0.5; }

inline Matrix zero_matrix(Eigen::Index rows, Eigen::Index cols) { return Matrix::Zero(rows, cols); }

}  // namespace slq
