#pragma once

#include "slq/model.hpp"
#include "slq/riccati_solution.hpp"
#include "slq/sde_sim.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace slq {

struct CostEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t paths = 0;
    double terminal_part = 0.0;
    double running_part = 0.0;
};

/// Per-path totals <M X_T, X_T> + running cost of a batch.
std::vector<double> path_costs(const TrajectoryBatch& batch);
CostEstimate estimate_cost(const TrajectoryBatch& batch);

struct EvalConfig {
    int steps = 2000;
    std::size_t paths = 100000;
    std::uint64_t seed = 0;
    Vector x0;
    double c_bias = 0.0;
    int blocks = 10;
    double truncation_level = 1e6;
};

/// One assertion. Warnings never fail a report.
struct Check {
    std::string group;
    std::string name;
    bool passed = true;
    bool warning = false;
    double value = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct VerificationReport {
    std::string instance;
    std::vector<Check> checks;
    /// Named scalar results (estimates, z-scores, counts) in insertion order.
    std::vector<std::pair<std::string, double>> metrics;

    [[nodiscard]] bool passed() const;
    [[nodiscard]] std::size_t failures() const;
    [[nodiscard]] double metric(const std::string& name) const;  // NaN when absent
    void append(const VerificationReport& other);
    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] std::string to_table() const;
};

/// Cached per-path results of one simulation.
struct PathRun {
    CostEstimate cost;
    std::vector<double> costs;    // per path
    std::vector<double> penalty;  // per path, int <N(K)(u - u~), u - u~> dt
    std::vector<double> kappa;    // [p][r]: <K X, X> + accumulated cost at recorded times
    std::size_t records = 0;
    std::size_t truncated = 0;
};

/// Monte Carlo checks of the value identities for one instance and one
/// Riccati solution. Every run shares the seed, so policies are compared on
/// common random numbers.
class Evaluator {
public:
    Evaluator(ProblemSpec spec, std::shared_ptr<const RiccatiSolution> solution, EvalConfig config,
              std::string instance_name = "");

    [[nodiscard]] const Matrix& K0() const noexcept { return K0_; }
    [[nodiscard]] double value_form(const Vector& x) const { return x.dot(K0_ * x); }
    [[nodiscard]] double bias_allowance() const noexcept;
    [[nodiscard]] const EvalConfig& config() const noexcept { return config_; }

    /// Simulates (or returns the cached run for) `label`.
    const PathRun& run(const std::string& label, const Policy& policy, const Vector& x0, std::uint64_t seed);
    const PathRun& run(const std::string& label, const Policy& policy);

    [[nodiscard]] Policy feedback(double scale = 1.0) const;
    [[nodiscard]] Policy constant(double value) const;
    [[nodiscard]] Policy random_piecewise(int pieces, std::uint64_t stream) const;

    VerificationReport verify_value_match();
    VerificationReport verify_completion_of_squares(const std::string& label, const Policy& policy);
    VerificationReport verify_dpp(const std::string& label, const Policy& policy, bool optimal);
    VerificationReport verify_quadratic_laws(const Vector& x, const Vector& y, double c);
    VerificationReport verify_dominance();
    VerificationReport verify_crn();

    /// Everything above with the default policy sets.
    VerificationReport verify_all();

private:
    ProblemSpec spec_;
    std::shared_ptr<const RiccatiSolution> solution_;
    EvalConfig config_;
    std::string name_;
    Matrix K0_;
    std::map<std::string, PathRun> cache_;
};

}  // namespace slq
