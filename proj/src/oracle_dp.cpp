#include "slq/oracle_dp.hpp"

#include "slq/csv.hpp"
#include "slq/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace slq {

namespace {

struct NodeResult {
    Matrix K;
    Matrix gain;
};

// One-step Bellman minimization given the two successor value matrices.
NodeResult bellman_node(const CoefficientSnapshot& s, const Matrix& K_up, const Matrix& K_down, double dt) {
    const double xi = std::sqrt(dt);
    const auto n = s.A.rows();
    const Matrix I = Matrix::Identity(n, n);
    const Matrix base_A = I + dt * s.A;
    const Matrix base_B = dt * s.B;
    const Matrix A_up = base_A + xi * s.C[0];
    const Matrix A_dn = base_A - xi * s.C[0];
    const Matrix B_up = base_B + xi * s.D[0];
    const Matrix B_dn = base_B - xi * s.D[0];

    const Matrix Huu = symmetrize(dt * s.N + 0.5 * (B_up.transpose() * K_up * B_up + B_dn.transpose() * K_down * B_dn));
    const Matrix Hux = 0.5 * (B_up.transpose() * K_up * A_up + B_dn.transpose() * K_down * A_dn);
    const Matrix Hxx = dt * s.Q + 0.5 * (A_up.transpose() * K_up * A_up + A_dn.transpose() * K_down * A_dn);

    Eigen::LLT<Matrix> llt(Huu);
    if (llt.info() != Eigen::Success) throw Error("tree node control Hessian is not positive definite");
    NodeResult r;
    r.gain = llt.solve(Hux);
    r.K = symmetrize(Hxx - Hux.transpose() * r.gain);
    return r;
}

void check_tree_spec(const Dimensions& dims, int steps) {
    if (dims.d != 1) throw ConfigError("tree oracle requires d = 1");
    if (steps < 1) throw ConfigError("tree oracle needs at least one step");
}

TreeValue run_tree(const Dimensions& dims, double T, int steps, TreeMode mode, SweepOrder order,
                   const std::function<void(int, std::uint32_t, CoefficientSnapshot&)>& coeffs,
                   const std::function<Matrix(std::uint32_t)>& terminal) {
    check_tree_spec(dims, steps);
    if (mode == TreeMode::PathDependent && steps > kMaxPathDependentSteps) {
        throw ConfigError("path-dependent tree limited to " + std::to_string(kMaxPathDependentSteps) + " steps");
    }
    const double dt = T / steps;
    TreeValue tree;
    tree.mode = mode;
    tree.steps = steps;
    tree.n = dims.n;
    tree.m = dims.m;
    tree.horizon = T;
    tree.K.resize(static_cast<std::size_t>(steps) + 1);
    tree.gains.resize(static_cast<std::size_t>(steps));

    auto width = [mode](int k) -> std::size_t {
        return mode == TreeMode::Recombining ? static_cast<std::size_t>(k) + 1 : std::size_t{1} << k;
    };

    auto& last = tree.K[static_cast<std::size_t>(steps)];
    last.resize(width(steps));
    for (std::size_t j = 0; j < last.size(); ++j) last[j] = terminal(static_cast<std::uint32_t>(j));

    for (int k = steps - 1; k >= 0; --k) {
        const auto kz = static_cast<std::size_t>(k);
        const std::size_t count = width(k);
        tree.K[kz].resize(count);
        tree.gains[kz].resize(count);
        const auto& next = tree.K[kz + 1];
        parallel_for(count, [&](std::size_t begin, std::size_t end) {
            CoefficientSnapshot snap;
            for (std::size_t i = begin; i < end; ++i) {
                const std::size_t node = order == SweepOrder::Forward ? i : count - 1 - i;
                std::size_t up, down;
                if (mode == TreeMode::Recombining) {
                    up = node + 1;
                    down = node;
                } else {
                    up = node | (std::size_t{1} << k);
                    down = node;
                }
                coeffs(k, static_cast<std::uint32_t>(node), snap);
                NodeResult r = bellman_node(snap, next[up], next[down], dt);
                tree.K[kz][node] = std::move(r.K);
                tree.gains[kz][node] = std::move(r.gain);
            }
        });
    }
    return tree;
}

int popcount(std::uint32_t x) {
    int c = 0;
    for (; x; x &= x - 1) ++c;
    return c;
}

}  // namespace

TreeValue solve_tree(const ProblemSpec& spec, int steps, TreeMode mode, SweepOrder order) {
    check_tree_spec(spec.dims, steps);
    const double T = spec.horizon;
    const double sq = std::sqrt(T / steps);
    // Brownian level of a node: recombining index j, or number of up moves in a history.
    auto level = [mode](int k, std::uint32_t node) {
        const int ups = mode == TreeMode::Recombining ? static_cast<int>(node) : popcount(node);
        return 2 * ups - k;
    };
    auto coeffs = [&](int k, std::uint32_t node, CoefficientSnapshot& snap) {
        evaluate_coefficients_into(spec, T * k / steps, level(k, node) * sq, snap);
    };
    auto terminal = [&](std::uint32_t node) { return terminal_weight(spec, level(steps, node) * sq); };
    return run_tree(spec.dims, T, steps, mode, order, coeffs, terminal);
}

TreeValue solve_tree(const TreeCoefficients& c, int steps, SweepOrder order) {
    auto coeffs = [&](int k, std::uint32_t node, CoefficientSnapshot& snap) { snap = c.step(k, node); };
    return run_tree(c.dims, c.horizon, steps, TreeMode::PathDependent, order, coeffs, c.terminal);
}

Matrix tree_policy_value(const ProblemSpec& spec, int steps, const TreePolicy& policy) {
    check_tree_spec(spec.dims, steps);
    const double T = spec.horizon;
    const double dt = T / steps;
    const double xi = std::sqrt(dt);
    const auto n = spec.dims.n;
    const Matrix I = Matrix::Identity(n, n);

    std::vector<Matrix> next(static_cast<std::size_t>(steps) + 1);
    for (int j = 0; j <= steps; ++j) next[static_cast<std::size_t>(j)] = terminal_weight(spec, (2 * j - steps) * xi);

    CoefficientSnapshot s;
    for (int k = steps - 1; k >= 0; --k) {
        std::vector<Matrix> cur(static_cast<std::size_t>(k) + 1);
        for (int j = 0; j <= k; ++j) {
            evaluate_coefficients_into(spec, T * k / steps, (2 * j - k) * xi, s);
            const Matrix G = policy(k, static_cast<std::uint32_t>(j));
            if (G.rows() != spec.dims.m || G.cols() != n) throw DimensionError("tree policy gain must be m x n");
            const Matrix closed = I + dt * (s.A - s.B * G);
            const Matrix noise = xi * (s.C[0] - s.D[0] * G);
            const Matrix up = closed + noise;
            const Matrix dn = closed - noise;
            const auto jz = static_cast<std::size_t>(j);
            cur[jz] = symmetrize(dt * (s.Q + G.transpose() * s.N * G) +
                                 0.5 * (up.transpose() * next[jz + 1] * up + dn.transpose() * next[jz] * dn));
        }
        next = std::move(cur);
    }
    return next.front();
}

void write_tree_csv(std::ostream& os, const TreeValue& tree) {
    CsvWriter csv(os);
    std::vector<std::string> header{"k", "t", "nodes", "trace_min", "trace_max"};
    for (int i = 0; i < tree.n; ++i)
        for (int j = 0; j < tree.n; ++j) header.push_back("Kc" + std::to_string(i) + std::to_string(j));
    csv.header(header);
    for (int k = 0; k <= tree.steps; ++k) {
        const auto& slice = tree.K[static_cast<std::size_t>(k)];
        double lo = slice.front().trace();
        double hi = lo;
        for (const auto& K : slice) {
            lo = std::min(lo, K.trace());
            hi = std::max(hi, K.trace());
        }
        csv.field(k);
        csv.field(tree.horizon * k / tree.steps);
        csv.field(slice.size());
        csv.field(lo);
        csv.field(hi);
        // Central node: w = 0 for even k in a recombining tree.
        csv.row_major(slice[tree.mode == TreeMode::Recombining ? slice.size() / 2 : 0]);
        csv.end_row();
    }
}

}  // namespace slq
