#include "slq/riccati_ode.hpp"

#include "slq/csv.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace slq {

Matrix project_psd(const Matrix& x, double tolerance) {
    Matrix s = symmetrize(x);
    if (s.rows() == 1) {
        if (s(0, 0) < -tolerance) throw BlowUpError("Riccati iterate left the PSD cone: " + std::to_string(s(0, 0)));
        if (s(0, 0) < 0.0) s(0, 0) = 0.0;
        return s;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    const double lo = es.eigenvalues()(0);
    if (lo < -tolerance) throw BlowUpError("Riccati iterate left the PSD cone: eigenvalue " + std::to_string(lo));
    if (lo >= 0.0) return s;
    const Vector clamped = es.eigenvalues().cwiseMax(0.0);
    return symmetrize(es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose());
}

RiccatiPath solve_backward(const ProblemSpec& spec, int steps) {
    if (steps < 2) throw ConfigError("solve_backward needs at least 2 steps");
    if (!spec.is_deterministic()) {
        throw ConfigError("solve_backward requires constant or time-varying coefficients; use the field solver");
    }
    const double T = spec.horizon;
    const int d = spec.dims.d;
    const auto S = static_cast<std::size_t>(steps);
    const double h = T / steps;

    RiccatiPath path;
    path.d = d;
    path.grid.resize(S + 1);
    for (std::size_t k = 0; k <= S; ++k) path.grid[k] = T * static_cast<double>(k) / steps;
    path.grid[S] = T;
    path.K.resize(S + 1);
    path.G.resize(S + 1);

    CoefficientSnapshot snap;
    RiccatiPoint point = RiccatiPoint::deterministic(terminal_weight(spec, 0.0), d);
    auto G = [&](double t, const Matrix& K) {
        evaluate_coefficients_into(spec, std::clamp(t, 0.0, T), 0.0, snap);
        point.K = K;
        return eval_G(snap, point);
    };

    path.K[S] = terminal_weight(spec, 0.0);
    for (std::size_t k = S; k > 0; --k) {
        const double t = path.grid[k];
        const Matrix& K = path.K[k];
        // Backward in t: dK/ds = G with s = T - t.
        const Matrix k1 = G(t, K);
        const Matrix k2 = G(t - 0.5 * h, K + (0.5 * h) * k1);
        const Matrix k3 = G(t - 0.5 * h, K + (0.5 * h) * k2);
        const Matrix k4 = G(t - h, K + h * k3);
        path.G[k] = k1;
        path.K[k - 1] = project_psd(K + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), kPsdClampTolerance);
    }
    path.G[0] = G(0.0, path.K[0]);
    return path;
}

Matrix interpolate(const RiccatiPath& path, double t) {
    const double T = path.horizon();
    if (!(t >= 0.0 && t <= T)) throw DomainError("interpolation time " + std::to_string(t) + " outside [0, T]");
    const auto it = std::upper_bound(path.grid.begin(), path.grid.end(), t);
    if (it == path.grid.end()) return path.K.back();
    const auto hi = static_cast<std::size_t>(it - path.grid.begin());
    const std::size_t lo = hi - 1;
    const double t0 = path.grid[lo];
    const double t1 = path.grid[hi];
    if (t == t0) return path.K[lo];
    const double theta = (t - t0) / (t1 - t0);
    return (1.0 - theta) * path.K[lo] + theta * path.K[hi];
}

void write_csv(std::ostream& os, const RiccatiPath& path) {
    const auto n = path.K.front().rows();
    CsvWriter csv(os);
    std::vector<std::string> header{"t"};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) header.push_back("K" + std::to_string(i) + std::to_string(j));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) header.push_back("G" + std::to_string(i) + std::to_string(j));
    csv.header(header);
    for (std::size_t k = 0; k < path.grid.size(); ++k) {
        csv.field(path.grid[k]);
        csv.row_major(path.K[k]);
        csv.row_major(path.G[k]);
        csv.end_row();
    }
}

}  // namespace slq
