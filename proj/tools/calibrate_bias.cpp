// Step-halving estimate of the Euler bias coefficient c_bias for an instance:
// J_S - J_2S ~ c dt / 2, so c ~ 2 (J_S - J_2S) / dt for each probe policy.

#include "slq/config.hpp"
#include "slq/evaluator.hpp"
#include "slq/riccati_solution.hpp"
#include "slq/sde_sim.hpp"
#include "slq/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>

int main(int argc, char** argv) {
    CLI::App app{"Calibrate the discretization-bias allowance of an instance", "slq-calibrate"};
    std::string config;
    int steps = 2000;
    std::size_t paths = 10000;
    std::uint64_t seed = 0;
    double safety = 2.0;
    app.add_option("--config", config)->required();
    app.add_option("--steps", steps);
    app.add_option("--paths", paths);
    app.add_option("--seed", seed);
    app.add_option("--safety", safety, "Multiplier applied to the largest estimate");
    CLI11_PARSE(app, argc, argv);

    try {
        const slq::Instance inst = slq::load_instance(config);
        const auto sol = std::make_shared<const slq::RiccatiSolution>(slq::solve_riccati(inst.spec, 2 * steps));
        const std::vector<std::pair<std::string, slq::Policy>> probes{
            {"feedback", slq::FeedbackPolicy{sol, 1.0}},
            {"zero", slq::ZeroPolicy{}},
            {"const:1", slq::OpenLoopPolicy{{slq::Vector::Constant(inst.spec.dims.m, 1.0)}}},
            {"gain:2", slq::FeedbackPolicy{sol, 2.0}},
        };
        nlohmann::ordered_json out;
        out["instance"] = inst.name;
        out["steps"] = steps;
        out["paths"] = paths;
        double worst = 0.0;
        for (const auto& [name, policy] : probes) {
            slq::SimConfig sc;
            sc.paths = paths;
            sc.seed = seed;
            sc.x0 = inst.x0;
            sc.record_stride = 0;
            sc.steps = steps;
            // Cost and cost minus the completion-of-squares penalty, at S and 2S on
            // the same Brownian paths.
            auto measure = [&](int s, int refine) {
                sc.steps = s;
                sc.brownian_refinement = refine;
                const slq::TrajectoryBatch b = slq::simulate(inst.spec, sc, policy, sol.get());
                std::vector<double> rest = slq::path_costs(b);
                for (std::size_t p = 0; p < rest.size(); ++p) rest[p] -= b.penalty[p];
                return std::pair{slq::estimate_cost(b), slq::sample_stats(rest)};
            };
            const auto [coarse, coarse_rest] = measure(steps, 2);
            const auto [fine, fine_rest] = measure(2 * steps, 1);
            const double dt = inst.spec.horizon / steps;
            const double c = 2.0 * std::abs(coarse.mean - fine.mean) / dt;
            const double c_rest = 2.0 * std::abs(coarse_rest.mean - fine_rest.mean) / dt;
            out["probes"][name] = {{"J_coarse", coarse.mean}, {"J_fine", fine.mean}, {"c", c},
                                   {"c_residual", c_rest}};
            worst = std::max({worst, c, c_rest});
        }
        out["recommended_c_bias"] = safety * worst;
        std::cout << out.dump(2) << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
