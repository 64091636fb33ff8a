#pragma once

#include "slq/model.hpp"

#include <span>
#include <vector>

namespace slq {

/// Value-field Hessian K and its martingale densities L = (L^1, ..., L^d).
struct RiccatiPoint {
    Matrix K;
    std::vector<Matrix> L;

    /// K with all L^i = 0 (deterministic coefficients).
    static RiccatiPoint deterministic(const Matrix& K, int d);
};

inline constexpr double kSingularityThreshold = 1e-12;

/// N + sum_i D_i' K D_i, symmetrized.
Matrix eval_N(const CoefficientSnapshot& s, const Matrix& K);

/// K B + sum_i C_i' K D_i + sum_i L_i D_i.
Matrix eval_M(const CoefficientSnapshot& s, const Matrix& K, std::span<const Matrix> L);

/// Riccati generator
///   A'K + KA + Q + sum C_i'KC_i + sum (C_i'L_i + L_i C_i) - M N^{-1} M'
/// with M, N from eval_M / eval_N. Symmetrized. Throws SingularityError when
/// the smallest eigenvalue of N(K) is <= 1e-12.
Matrix eval_G(const CoefficientSnapshot& s, const RiccatiPoint& p);

/// Feedback gain Theta = N(K)^{-1} M(K, L)'; the optimal control is u = -Theta x.
Matrix feedback_gain(const CoefficientSnapshot& s, const RiccatiPoint& p);

/// Same as feedback_gain, also returning N(K) (needed by completion-of-squares).
Matrix feedback_gain(const CoefficientSnapshot& s, const RiccatiPoint& p, Matrix& control_hessian);

}  // namespace slq
