#pragma once

#include "slq/model.hpp"
#include "slq/riccati_core.hpp"

#include <ostream>
#include <vector>

namespace slq {

/// Solution of the deterministic Riccati equation dK/dt = -G(t, K, 0),
/// K(T) = M, on a uniform grid.
struct RiccatiPath {
    std::vector<double> grid;     // 0 = t_0 < ... < t_S = T
    std::vector<Matrix> K;        // K(t_k), symmetric PSD
    std::vector<Matrix> G;        // G(t_k, K(t_k), 0)
    int d = 1;

    [[nodiscard]] std::size_t steps() const noexcept { return grid.empty() ? 0 : grid.size() - 1; }
    [[nodiscard]] double horizon() const { return grid.back(); }
};

inline constexpr double kPsdClampTolerance = 1e-8;

/// Classical 4-stage Runge-Kutta, fixed step T/S, backward from K(T) = M.
/// Each iterate is symmetrized and projected onto the PSD cone; eigenvalues
/// below -1e-8 raise BlowUpError. Requires a deterministic spec and S >= 2.
RiccatiPath solve_backward(const ProblemSpec& spec, int steps);

/// Linear interpolation in t; exact at grid points. Throws DomainError
/// outside [0, T].
Matrix interpolate(const RiccatiPath& path, double t);

/// Columns: t, K row-major, G row-major.
void write_csv(std::ostream& os, const RiccatiPath& path);

/// Symmetrize, then clamp small negative eigenvalues to zero. Throws
/// BlowUpError when the smallest eigenvalue is below -tolerance.
Matrix project_psd(const Matrix& x, double tolerance);

}  // namespace slq
