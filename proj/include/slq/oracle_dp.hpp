#pragma once

#include "slq/model.hpp"

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

namespace slq {

enum class TreeMode { Recombining, PathDependent };

/// Order in which nodes of one time slice are visited. Node updates are
/// independent, so both orders must give identical results.
enum class SweepOrder { Forward, Reverse };

inline constexpr int kMaxPathDependentSteps = 16;

/// Exact discrete value V_k(node, x) = <K_k(node) x, x> on a binomial tree
/// with increments +-sqrt(dt). Recombining nodes at step k are j = 0..k
/// (w = (2j - k) sqrt(dt)); path-dependent nodes are the 2^k sign histories,
/// bit i set when increment i was up.
struct TreeValue {
    TreeMode mode = TreeMode::Recombining;
    int steps = 0;
    int n = 0;
    int m = 0;
    double horizon = 0.0;
    std::vector<std::vector<Matrix>> K;      // [k][node]
    std::vector<std::vector<Matrix>> gains;  // [k][node], k < S: u* = -gain x

    [[nodiscard]] const Matrix& root() const { return K.front().front(); }
    [[nodiscard]] std::size_t nodes(int k) const { return K[static_cast<std::size_t>(k)].size(); }
};

/// Coefficients as functions of the sign history, for path-dependent trees.
struct TreeCoefficients {
    Dimensions dims;
    double horizon = 1.0;
    std::function<CoefficientSnapshot(int step, std::uint32_t history)> step;
    std::function<Matrix(std::uint32_t history)> terminal;
};

/// Backward recursion with exact per-node minimization over u:
///   H_uu = N dt + E[B^' K' B^],  H_ux = E[B^' K' A^],  H_xx = Q dt + E[A^' K' A^]
///   K = H_xx - H_ux' H_uu^{-1} H_ux,  gain = H_uu^{-1} H_ux
/// where A^ = I + A dt + C xi, B^ = B dt + D xi, xi = +-sqrt(dt) equiprobable.
/// Requires d = 1. PathDependent needs S <= 16.
TreeValue solve_tree(const ProblemSpec& spec, int steps, TreeMode mode, SweepOrder order = SweepOrder::Forward);
TreeValue solve_tree(const TreeCoefficients& coeffs, int steps, SweepOrder order = SweepOrder::Forward);

/// Node-indexed linear feedback u = -gain(k, node) x.
using TreePolicy = std::function<Matrix(int step, std::uint32_t node)>;

/// Exact value matrix of a node policy at the root (no minimization):
/// P_k = (Q + G'NG) dt + E[(A^ - B^G)' P_{k+1} (A^ - B^G)]. Recombining tree.
Matrix tree_policy_value(const ProblemSpec& spec, int steps, const TreePolicy& policy);

/// Columns: k, t, nodes, min/max of trace(K) over the slice, K at the central node row-major.
void write_tree_csv(std::ostream& os, const TreeValue& tree);

}  // namespace slq
