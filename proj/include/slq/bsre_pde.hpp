#pragma once

#include "slq/model.hpp"
#include "slq/riccati_core.hpp"

#include <cstdint>
#include <ostream>
#include <vector>

namespace slq {

/// Resolution of the lifted backward equation
///   kappa_t + 1/2 kappa_ww + G(t, kappa, kappa_w) = 0,  kappa(T, w) = M(w).
struct FieldConfig {
    int time_steps = 0;    // 0: smallest S with dt <= 0.9 dw^2
    int space_nodes = 201;
    double w_max = 0.0;    // 0: 5 sqrt(T)
};

/// kappa(t, w) and L(t, w) = kappa_w(t, w) on a uniform (t, w) grid.
/// Storage is flat: node (k, j) occupies n*n doubles (column-major) at
/// offset ((k * J) + j) * n * n.
class RiccatiField {
public:
    RiccatiField() = default;
    RiccatiField(std::vector<double> t_grid, std::vector<double> w_grid, int n);

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] const std::vector<double>& t_grid() const noexcept { return t_grid_; }
    [[nodiscard]] const std::vector<double>& w_grid() const noexcept { return w_grid_; }
    [[nodiscard]] std::size_t time_steps() const noexcept { return t_grid_.size() - 1; }
    [[nodiscard]] std::size_t space_nodes() const noexcept { return w_grid_.size(); }
    [[nodiscard]] double horizon() const { return t_grid_.back(); }
    [[nodiscard]] double w_max() const { return w_grid_.back(); }
    [[nodiscard]] double dt() const { return t_grid_[1] - t_grid_[0]; }
    [[nodiscard]] double dw() const { return w_grid_[1] - w_grid_[0]; }

    [[nodiscard]] Matrix K(std::size_t k, std::size_t j) const;
    [[nodiscard]] Matrix L(std::size_t k, std::size_t j) const;
    void set_K(std::size_t k, std::size_t j, const Matrix& value);
    void set_L(std::size_t k, std::size_t j, const Matrix& value);

    /// Largest Frobenius norm of L over the grid.
    [[nodiscard]] double sup_L_norm() const;

private:
    friend bool sample_into(const RiccatiField&, double, double, RiccatiPoint&);
    [[nodiscard]] std::size_t offset(std::size_t k, std::size_t j) const {
        return (k * w_grid_.size() + j) * static_cast<std::size_t>(n_ * n_);
    }

    std::vector<double> t_grid_;
    std::vector<double> w_grid_;
    int n_ = 0;
    std::vector<double> K_;
    std::vector<double> L_;
};

/// Explicit backward time stepping with Neumann closure (kappa_w = 0) at
/// |w| = W_max; stored L uses central differences inside and one-sided
/// differences on the two boundary nodes. Requires d = 1, dt <= dw^2 and
/// W_max >= 4 sqrt(T) (ConfigError otherwise). Slices are symmetrized and
/// PSD-clamped; BlowUpError when an eigenvalue falls below -1e-8.
RiccatiField solve_field(const ProblemSpec& spec, const FieldConfig& config = {});

/// Resolved (S, J, W_max) that solve_field would use for `config`.
FieldConfig resolve_field_config(const ProblemSpec& spec, const FieldConfig& config);

struct FieldSample {
    RiccatiPoint point;
    bool clamped = false;  // w was outside [-W_max, W_max]
};

/// Bilinear interpolation of K and L. t outside [0, T] throws DomainError;
/// w outside the grid is clamped and flagged.
FieldSample sample_solution(const RiccatiField& field, double t, double w);

/// Allocation-free variant; returns the clamp flag. `out.L` must hold one matrix.
bool sample_into(const RiccatiField& field, double t, double w, RiccatiPoint& out);

/// Columns: t, w, K row-major, L row-major.
void write_csv(std::ostream& os, const RiccatiField& field);

/// Sample moments of I = int_0^T |L(t, W_t)|^2 dt over simulated Brownian paths
/// (left-point rule on the field's time grid).
struct LMomentReport {
    std::size_t paths = 0;
    std::vector<int> powers;
    std::vector<double> moments;      // E[I^p]
    std::vector<double> moment_bounds;  // (T sup|L|^2)^p
    double max_integral = 0.0;
    double integral_bound = 0.0;      // T sup_grid |L|^2
    bool all_finite = true;
    std::size_t clamped_samples = 0;
};

LMomentReport sample_L_moments(const RiccatiField& field, std::size_t paths, std::uint64_t seed,
                               const std::vector<int>& powers = {2, 4, 8});

}  // namespace slq
