#pragma once

#include "slq/model.hpp"
#include "slq/riccati_solution.hpp"

#include <cstdint>
#include <memory>
#include <ostream>
#include <variant>
#include <vector>

namespace slq {

struct SimConfig {
    int steps = 1000;
    std::size_t paths = 1000;
    std::uint64_t seed = 0;
    Vector x0;
    /// Record W, X, u every `record_stride` steps (T is always recorded).
    /// 0 records only t = 0 and t = T. Per-path totals are exact regardless.
    int record_stride = 1;
    /// > 0: stop a path at the first step with |X| >= level (localization).
    double truncation_level = 0.0;
    /// Each increment sums this many draws of a grid r times finer, so runs at
    /// S and r S steps can share one Brownian path (step-halving studies).
    int brownian_refinement = 1;
};

class TrajectoryBatch;

struct ZeroPolicy {};

/// Deterministic control, piecewise constant on a uniform grid over [0, T].
struct OpenLoopPolicy {
    std::vector<Vector> grid;
};

/// Per-path controls taken from a batch recorded with record_stride = 1.
struct ReplayPolicy {
    std::shared_ptr<const TrajectoryBatch> batch;
};

/// u = -scale * Theta(t_k, W_k) X_k with the gain at the left endpoint.
struct FeedbackPolicy {
    std::shared_ptr<const RiccatiSolution> solution;
    double scale = 1.0;
};

using Policy = std::variant<ZeroPolicy, OpenLoopPolicy, ReplayPolicy, FeedbackPolicy>;

/// Seeded ensemble of Euler-Maruyama paths. Recorded arrays are row-major
/// [path][record][component].
class TrajectoryBatch {
public:
    std::size_t paths = 0;
    int steps = 0;
    int n = 0, m = 0, d = 0;
    double dt = 0.0;
    std::vector<double> times;    // S + 1 grid times
    std::vector<int> recorded;    // recorded step indices; first 0, last S

    std::vector<double> W;             // [p][r][d]
    std::vector<double> X;             // [p][r][n]
    std::vector<double> U;             // [p][r][m] for recorded steps < S
    std::vector<double> running_cost;  // [p][r] cost accrued over (recorded[r], recorded[r+1]]

    // Per-path totals.
    std::vector<double> terminal_cost;  // <M X_T, X_T>; 0 for stopped paths
    std::vector<double> total_running;
    std::vector<double> penalty;        // int <N(K)(u - u~), u - u~> dt when a reference was given
    std::vector<int> stop_step;         // S unless the path was truncated
    std::vector<double> stop_state;     // [p][n] X at stop_step
    std::vector<double> stop_w;         // [p][d] W at stop_step
    std::size_t truncated = 0;
    bool has_penalty = false;

    [[nodiscard]] std::size_t records() const noexcept { return recorded.size(); }
    [[nodiscard]] double w(std::size_t p, std::size_t r, int i) const { return W[(p * records() + r) * d + i]; }
    [[nodiscard]] double x(std::size_t p, std::size_t r, int i) const { return X[(p * records() + r) * n + i]; }
    [[nodiscard]] double u(std::size_t p, std::size_t r, int i) const { return U[(p * (records() - 1) + r) * m + i]; }
    [[nodiscard]] Vector state(std::size_t p, std::size_t r) const;
    [[nodiscard]] Vector stopped_state(std::size_t p) const;
    /// Index of step k in `recorded`, or -1.
    [[nodiscard]] int record_index(int step) const;
};

/// X_{k+1} = X_k + (A X_k + B u_k) dt + sum_i (C_i X_k + D_i u_k) dW_i.
/// Coefficients and gains are taken at (t_k, W_k). Running cost per step is
/// trapezoidal in the state term and exact for the piecewise-constant control.
/// When `penalty_reference` is given, each path also accumulates
/// int <N(K)(u - u~), u - u~> dt with u~ = -Theta X from that solution.
/// Throws DivergenceError naming the first non-finite path and step.
TrajectoryBatch simulate(const ProblemSpec& spec, const SimConfig& config, const Policy& policy,
                         const RiccatiSolution* penalty_reference = nullptr);

/// Fundamental flow Phi and its inverse Psi on shared Brownian increments:
///   dPhi = A Phi dt + C_i Phi dW_i,                Phi_0 = I
///   dPsi = Psi (-A + C_i C_i) dt - Psi C_i dW_i,   Psi_0 = I
struct FlowBatch {
    std::size_t paths = 0;
    int steps = 0;
    int n = 0;
    std::vector<double> times;
    std::vector<int> recorded;
    std::vector<double> Phi;  // [p][r][n*n] column-major
    std::vector<double> Psi;
    std::vector<double> max_defect;  // per path: max over all steps of ||Phi Psi - I||_inf

    [[nodiscard]] Matrix phi(std::size_t p, std::size_t r) const;
    [[nodiscard]] Matrix psi(std::size_t p, std::size_t r) const;
};

FlowBatch simulate_flows(const ProblemSpec& spec, const SimConfig& config);

/// Long format: path, k, t, W*, X*, u*, cost (u and cost empty on the last row).
void write_trajectories_csv(std::ostream& os, const TrajectoryBatch& batch);

/// One row per quantity: name, mean, stderr, min, max over paths.
void write_summary_csv(std::ostream& os, const ProblemSpec& spec, const TrajectoryBatch& batch);

}  // namespace slq
