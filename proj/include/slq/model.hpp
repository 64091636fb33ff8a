#pragma once

#include "slq/expression.hpp"
#include "slq/types.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace slq {

struct Dimensions {
    int n = 1;  // state
    int m = 1;  // control
    int d = 1;  // Brownian

    friend bool operator==(const Dimensions&, const Dimensions&) = default;
};

/// Randomness of a coefficient. Ordered: a spec's mode is the largest mode of
/// its coefficients.
enum class CoefficientMode { Constant = 0, TimeVarying = 1, BrownianFunctional = 2 };

const char* to_string(CoefficientMode mode);

/// Matrix-valued coefficient as a function of (t, w), where w is the scalar
/// Brownian value W_t. Constant ignores both arguments, TimeVarying ignores w.
class CoefficientProcess {
public:
    using Evaluator = std::function<void(double t, double w, Matrix& out)>;

    static constexpr double kUndeclaredBound = std::numeric_limits<double>::infinity();

    CoefficientProcess() = default;

    static CoefficientProcess constant(const Matrix& value, double bound = kUndeclaredBound);
    static CoefficientProcess time_varying(int rows, int cols, std::function<Matrix(double t)> fn,
                                           double bound = kUndeclaredBound);
    static CoefficientProcess brownian(int rows, int cols, std::function<Matrix(double t, double w)> fn,
                                       double bound = kUndeclaredBound);
    /// Row-major entry expressions. The mode must admit the variables used.
    static CoefficientProcess from_expressions(CoefficientMode mode, int rows, int cols,
                                               std::vector<Expression> entries,
                                               double bound = kUndeclaredBound);

    [[nodiscard]] CoefficientMode mode() const noexcept { return mode_; }
    [[nodiscard]] int rows() const noexcept { return rows_; }
    [[nodiscard]] int cols() const noexcept { return cols_; }
    [[nodiscard]] double bound() const noexcept { return bound_; }
    [[nodiscard]] bool is_zero() const noexcept { return known_zero_; }

    /// Writes into `out`, resizing it to (rows, cols).
    void evaluate_into(double t, double w, Matrix& out) const;
    [[nodiscard]] Matrix operator()(double t, double w) const;

private:
    CoefficientMode mode_ = CoefficientMode::Constant;
    int rows_ = 0;
    int cols_ = 0;
    double bound_ = kUndeclaredBound;
    bool known_zero_ = false;
    Evaluator eval_;
};

/// SLQ problem instance: dynamics dX = (AX + Bu)dt + sum_i (C_i X + D_i u)dW_i,
/// cost <M X_T, X_T> + int (<QX,X> + <Nu,u>) dt.
struct ProblemSpec {
    Dimensions dims;
    double horizon = 1.0;
    CoefficientProcess A;
    CoefficientProcess B;
    std::vector<CoefficientProcess> C;
    std::vector<CoefficientProcess> D;
    CoefficientProcess Q;
    CoefficientProcess N;
    CoefficientProcess M;  // terminal weight, evaluated at t = horizon
    double delta = 1.0;    // uniform positivity floor of N

    [[nodiscard]] CoefficientMode mode() const;
    [[nodiscard]] bool is_deterministic() const { return mode() != CoefficientMode::BrownianFunctional; }
};

/// All coefficients frozen at one (t, w).
struct CoefficientSnapshot {
    double t = 0.0;
    double w = 0.0;
    Matrix A;
    Matrix B;
    std::vector<Matrix> C;
    std::vector<Matrix> D;
    Matrix Q;
    Matrix N;
};

struct Violation {
    std::string message;
    double t = 0.0;
    double w = 0.0;
};

struct ValidationReport {
    std::vector<Violation> violations;
    [[nodiscard]] bool valid() const noexcept { return violations.empty(); }
};

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr int kSampleLattice = 101;
inline constexpr double kSampleWMax = 5.0;

/// Checks shapes, boundedness against each declared bound, symmetry and
/// positivity of Q, M (PSD) and N (eigenvalues >= delta) on a 101 x 101
/// (t, w) lattice with w in [-5, 5]. Never throws; violations are data.
ValidationReport validate(const ProblemSpec& spec);

/// Throws DomainError if t is outside [0, T] or w is not finite.
CoefficientSnapshot evaluate_coefficients(const ProblemSpec& spec, double t, double w);

/// In-place variant for hot loops; `snap` keeps its allocations.
void evaluate_coefficients_into(const ProblemSpec& spec, double t, double w, CoefficientSnapshot& snap);

Matrix terminal_weight(const ProblemSpec& spec, double w);

/// Convenience for constant-coefficient problems.
struct ConstantCoefficients {
    Matrix A, B;
    std::vector<Matrix> C, D;
    Matrix Q, N, M;
    double horizon = 1.0;
    double delta = -1.0;  // negative: use the smallest eigenvalue of N
};

ProblemSpec make_constant_spec(const ConstantCoefficients& c);

/// Scalar constant spec: n = m = d = 1.
ProblemSpec make_scalar_spec(double a, double b, double c, double d, double q, double n, double m,
                             double horizon = 1.0);

}  // namespace slq
