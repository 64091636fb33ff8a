#pragma once

#include "slq/bsre_pde.hpp"
#include "slq/riccati_ode.hpp"

#include <variant>

namespace slq {

/// Either solver's output; consumers only need (K, L) at (t, W_t).
using RiccatiSolution = std::variant<RiccatiPath, RiccatiField>;

/// (K, L) at time t and Brownian value w. Paths ignore w and return L = 0.
RiccatiPoint solution_point(const RiccatiSolution& sol, double t, double w);

/// In-place form; returns true when w was clamped to the field grid.
bool solution_point_into(const RiccatiSolution& sol, double t, double w, RiccatiPoint& out);

[[nodiscard]] inline bool depends_on_brownian(const RiccatiSolution& sol) {
    return std::holds_alternative<RiccatiField>(sol);
}

/// Picks the ODE solver for deterministic specs and the field solver otherwise.
RiccatiSolution solve_riccati(const ProblemSpec& spec, int ode_steps, const FieldConfig& field = {});

}  // namespace slq
