#include "slq/riccati_solution.hpp"

namespace slq {

bool solution_point_into(const RiccatiSolution& sol, double t, double w, RiccatiPoint& out) {
    if (const auto* path = std::get_if<RiccatiPath>(&sol)) {
        out.K = interpolate(*path, t);
        out.L.resize(static_cast<std::size_t>(path->d));
        for (auto& l : out.L) l.setZero(out.K.rows(), out.K.cols());
        return false;
    }
    return sample_into(std::get<RiccatiField>(sol), t, w, out);
}

RiccatiPoint solution_point(const RiccatiSolution& sol, double t, double w) {
    RiccatiPoint p;
    solution_point_into(sol, t, w, p);
    return p;
}

RiccatiSolution solve_riccati(const ProblemSpec& spec, int ode_steps, const FieldConfig& field) {
    if (spec.is_deterministic()) return solve_backward(spec, ode_steps);
    return solve_field(spec, field);
}

}  // namespace slq
