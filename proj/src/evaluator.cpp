#include "slq/evaluator.hpp"

#include "slq/rng.hpp"
#include "slq/stats.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace slq {

std::vector<double> path_costs(const TrajectoryBatch& b) {
    std::vector<double> out(b.paths);
    for (std::size_t p = 0; p < b.paths; ++p) out[p] = b.terminal_cost[p] + b.total_running[p];
    return out;
}

CostEstimate estimate_cost(const TrajectoryBatch& b) {
    const std::vector<double> costs = path_costs(b);
    const SampleStats s = sample_stats(costs);
    CostEstimate e;
    e.mean = s.mean;
    e.std_error = s.std_error;
    e.paths = s.count;
    if (b.paths > 0) {
        const auto P = static_cast<double>(b.paths);
        e.terminal_part = pairwise_sum(b.terminal_cost) / P;
        e.running_part = pairwise_sum(b.total_running) / P;
    }
    return e;
}

bool VerificationReport::passed() const { return failures() == 0; }

std::size_t VerificationReport::failures() const {
    std::size_t f = 0;
    for (const auto& c : checks)
        if (!c.passed && !c.warning) ++f;
    return f;
}

double VerificationReport::metric(const std::string& name) const {
    for (const auto& [k, v] : metrics)
        if (k == name) return v;
    return std::numeric_limits<double>::quiet_NaN();
}

void VerificationReport::append(const VerificationReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
    metrics.insert(metrics.end(), other.metrics.begin(), other.metrics.end());
}

namespace {

nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

std::string VerificationReport::to_json() const {
    nlohmann::ordered_json j;
    j["instance"] = instance;
    j["passed"] = passed();
    j["failures"] = failures();
    auto& arr = j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        nlohmann::ordered_json e;
        e["group"] = c.group;
        e["name"] = c.name;
        e["status"] = c.passed ? "pass" : (c.warning ? "warning" : "fail");
        e["value"] = number(c.value);
        e["reference"] = number(c.reference);
        e["tolerance"] = number(c.tolerance);
        if (!c.detail.empty()) e["detail"] = c.detail;
        arr.push_back(std::move(e));
    }
    auto& m = j["metrics"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : metrics) m[k] = number(v);
    return j.dump(2) + "\n";
}

std::string VerificationReport::to_table() const {
    std::ostringstream os;
    os << std::left << std::setw(22) << "group" << std::setw(28) << "check" << std::setw(8) << "status"
       << std::right << std::setw(16) << "value" << std::setw(16) << "reference" << std::setw(14) << "tolerance"
       << "\n";
    os << std::setprecision(8);
    for (const auto& c : checks) {
        os << std::left << std::setw(22) << c.group << std::setw(28) << c.name << std::setw(8)
           << (c.passed ? "pass" : (c.warning ? "WARN" : "FAIL")) << std::right << std::setw(16) << c.value
           << std::setw(16) << c.reference << std::setw(14) << c.tolerance << "\n";
    }
    os << (passed() ? "all checks passed" : std::to_string(failures()) + " check(s) failed") << "\n";
    return os.str();
}

Evaluator::Evaluator(ProblemSpec spec, std::shared_ptr<const RiccatiSolution> solution, EvalConfig config,
                     std::string instance_name)
    : spec_(std::move(spec)), solution_(std::move(solution)), config_(std::move(config)), name_(std::move(instance_name)) {
    if (!solution_) throw ConfigError("evaluator needs a Riccati solution");
    if (config_.blocks < 1 || config_.steps % config_.blocks != 0) {
        throw ConfigError("steps must be a multiple of the number of DPP blocks");
    }
    if (config_.x0.size() == 0) config_.x0 = Vector::Ones(spec_.dims.n);
    if (config_.x0.size() != spec_.dims.n) throw DimensionError("x0 must have n entries");
    K0_ = solution_point(*solution_, 0.0, 0.0).K;
}

double Evaluator::bias_allowance() const noexcept { return config_.c_bias * spec_.horizon / config_.steps; }

const PathRun& Evaluator::run(const std::string& label, const Policy& policy) {
    return run(label, policy, config_.x0, config_.seed);
}

const PathRun& Evaluator::run(const std::string& label, const Policy& policy, const Vector& x0, std::uint64_t seed) {
    const std::string key = label + "#" + std::to_string(seed);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;

    SimConfig sc;
    sc.steps = config_.steps;
    sc.paths = config_.paths;
    sc.seed = seed;
    sc.x0 = x0;
    sc.record_stride = config_.steps / config_.blocks;
    sc.truncation_level = config_.truncation_level;
    const TrajectoryBatch b = simulate(spec_, sc, policy, solution_.get());

    PathRun r;
    r.cost = estimate_cost(b);
    r.costs = path_costs(b);
    r.penalty = b.penalty;
    r.truncated = b.truncated;
    r.records = b.records();
    r.kappa.assign(b.paths * r.records, 0.0);
    RiccatiPoint point;
    for (std::size_t p = 0; p < b.paths; ++p) {
        double accrued = 0.0;
        for (std::size_t k = 0; k < r.records; ++k) {
            if (k > 0) accrued += b.running_cost[p * (r.records - 1) + k - 1];
            const double t = b.times[static_cast<std::size_t>(b.recorded[k])];
            solution_point_into(*solution_, t, b.d > 0 ? b.w(p, k, 0) : 0.0, point);
            const Vector x = b.state(p, k);
            r.kappa[p * r.records + k] = x.dot(point.K * x) + accrued;
        }
    }
    return cache_.emplace(key, std::move(r)).first->second;
}

Policy Evaluator::feedback(double scale) const { return FeedbackPolicy{solution_, scale}; }

Policy Evaluator::constant(double value) const {
    return OpenLoopPolicy{{Vector::Constant(spec_.dims.m, value)}};
}

Policy Evaluator::random_piecewise(int pieces, std::uint64_t stream) const {
    UniformStream u(config_.seed ^ 0x5eedf00dULL, stream);
    OpenLoopPolicy pol;
    for (int g = 0; g < pieces; ++g) {
        Vector v(spec_.dims.m);
        for (int i = 0; i < spec_.dims.m; ++i) v(i) = 2.0 * u.next() - 1.0;
        pol.grid.push_back(v);
    }
    return pol;
}

namespace {

Check make_check(std::string group, std::string name, double value, double reference, double tolerance, bool ok,
                 std::string detail = {}) {
    Check c;
    c.group = std::move(group);
    c.name = std::move(name);
    c.value = value;
    c.reference = reference;
    c.tolerance = tolerance;
    c.passed = ok;
    c.detail = std::move(detail);
    return c;
}

SampleStats paired(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return sample_stats(d);
}

void nonnegativity(VerificationReport& r, const std::string& label, const CostEstimate& e) {
    r.checks.push_back(make_check("cost", "nonnegative:" + label, e.mean, -4.0 * e.std_error, 0.0,
                                  e.mean >= -4.0 * e.std_error));
}

// Sum of coefficients times vectors of per-path costs.
std::vector<double> combine(const std::vector<std::pair<double, const std::vector<double>*>>& terms) {
    std::vector<double> out(terms.front().second->size(), 0.0);
    for (const auto& [c, v] : terms)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * (*v)[i];
    return out;
}

std::string vec_label(const Vector& x) {
    std::ostringstream os;
    os << std::setprecision(17) << "[";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << x(i);
    os << "]";
    return os.str();
}

}  // namespace

VerificationReport Evaluator::verify_value_match() {
    VerificationReport r;
    r.instance = name_;
    const PathRun& fb = run("feedback", feedback());
    const PathRun& zero = run("zero", ZeroPolicy{});
    const double q0 = value_form(config_.x0);
    const double bias = bias_allowance();
    const double se = fb.cost.std_error;
    const double diff = fb.cost.mean - q0;
    const double tol = std::max(3.0 * se, bias);
    const double scale = std::max(se, bias / 3.0);
    const double z = scale > 0.0 ? std::abs(diff) / scale : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());

    r.metrics.emplace_back("J_feedback", fb.cost.mean);
    r.metrics.emplace_back("J_feedback_stderr", se);
    r.metrics.emplace_back("K0_quadratic_form", q0);
    r.metrics.emplace_back("J_zero", zero.cost.mean);
    r.metrics.emplace_back("J_zero_stderr", zero.cost.std_error);
    r.metrics.emplace_back("value_match_z", z);
    r.checks.push_back(make_check("value_match", "J(feedback)=<K0x,x>", fb.cost.mean, q0, tol, std::abs(diff) <= tol));

    const SampleStats gap = paired(zero.costs, fb.costs);
    r.checks.push_back(make_check("value_match", "J(feedback)<=J(zero)", fb.cost.mean, zero.cost.mean,
                                  3.0 * gap.std_error, gap.mean >= -3.0 * gap.std_error));

    const double xx = config_.x0.squaredNorm();
    const double lambda = xx > 0.0 ? zero.cost.mean / xx : 0.0;
    r.metrics.emplace_back("lambda_sample", lambda);
    r.checks.push_back(make_check("value_bounds", "<K0x,x>>=0", q0, 0.0, 1e-8, q0 >= -1e-8));
    const double upper_tol = 3.0 * zero.cost.std_error + bias;
    r.checks.push_back(make_check("value_bounds", "<K0x,x><=lambda|x|^2", q0, lambda * xx, upper_tol,
                                  q0 <= lambda * xx + upper_tol));
    nonnegativity(r, "feedback", fb.cost);
    nonnegativity(r, "zero", zero.cost);
    return r;
}

VerificationReport Evaluator::verify_completion_of_squares(const std::string& label, const Policy& policy) {
    VerificationReport r;
    r.instance = name_;
    const PathRun& run_u = run(label, policy);
    const double q0 = value_form(config_.x0);
    // Per-path J(u) - penalty; its mean should be <K0x,x>.
    const std::vector<double> rest = combine({{1.0, &run_u.costs}, {-1.0, &run_u.penalty}});
    const SampleStats s = sample_stats(rest);
    const SampleStats pen = sample_stats(run_u.penalty);
    const double tol = 3.0 * s.std_error + bias_allowance();
    r.metrics.emplace_back("cos:" + label + ":J", run_u.cost.mean);
    r.metrics.emplace_back("cos:" + label + ":penalty", pen.mean);
    r.metrics.emplace_back("cos:" + label + ":residual", s.mean - q0);
    r.metrics.emplace_back("cos:" + label + ":truncated", static_cast<double>(run_u.truncated));
    r.checks.push_back(make_check("completion_of_squares", label, run_u.cost.mean, q0 + pen.mean, tol,
                                  std::abs(s.mean - q0) <= tol));
    Check trunc = make_check("completion_of_squares", "truncated:" + label, static_cast<double>(run_u.truncated), 0.0,
                             0.0, run_u.truncated == 0, "paths stopped at |X| >= truncation level");
    trunc.warning = run_u.truncated != 0;
    r.checks.push_back(trunc);
    nonnegativity(r, label, run_u.cost);
    return r;
}

VerificationReport Evaluator::verify_dpp(const std::string& label, const Policy& policy, bool optimal) {
    VerificationReport r;
    r.instance = name_;
    const PathRun& pr = run(label, policy);
    const std::size_t R = pr.records;
    const std::size_t P = pr.costs.size();
    const double bias = bias_allowance();
    std::vector<double> inc(P);
    for (std::size_t k = 0; k + 1 < R; ++k) {
        for (std::size_t p = 0; p < P; ++p) inc[p] = pr.kappa[p * R + k + 1] - pr.kappa[p * R + k];
        const SampleStats s = sample_stats(inc);
        const std::string name = label + ":block" + std::to_string(k);
        r.metrics.emplace_back("dpp:" + name, s.mean);
        if (optimal) {
            const double tol = 3.0 * s.std_error + bias;
            r.checks.push_back(make_check("dpp_martingale", name, s.mean, 0.0, tol, std::abs(s.mean) <= tol));
        } else {
            const double tol = 3.0 * s.std_error + bias;
            r.checks.push_back(make_check("dpp_submartingale", name, s.mean, 0.0, tol, s.mean >= -tol));
        }
    }
    for (std::size_t p = 0; p < P; ++p) inc[p] = pr.kappa[p * R + R - 1] - pr.kappa[p * R];
    const SampleStats total = sample_stats(inc);
    r.metrics.emplace_back("dpp:" + label + ":total_drift", total.mean);
    if (!optimal) {
        r.checks.push_back(make_check("dpp_submartingale", label + ":total_drift>0", total.mean, 0.0,
                                      3.0 * total.std_error, total.mean > 0.0));
        // Total drift against the cost gap J(u) - J(feedback) on the same paths.
        const PathRun& fb = run("feedback", feedback());
        const std::vector<double> gap = combine({{1.0, &pr.costs}, {-1.0, &fb.costs}});
        const std::vector<double> d = combine({{1.0, &inc}, {-1.0, &gap}});
        const SampleStats sd = sample_stats(d);
        const double cost_gap = sample_stats(gap).mean;
        const double tol = 3.0 * sd.std_error + bias;
        r.metrics.emplace_back("dpp:" + label + ":cost_gap", cost_gap);
        r.checks.push_back(make_check("dpp_submartingale", label + ":drift=cost_gap", total.mean, cost_gap, tol,
                                      std::abs(sd.mean) <= tol));
    }
    return r;
}

VerificationReport Evaluator::verify_quadratic_laws(const Vector& x, const Vector& y, double c) {
    VerificationReport r;
    r.instance = name_;
    if (x.size() != spec_.dims.n || y.size() != spec_.dims.n) throw DimensionError("quadratic-law vectors must have n entries");

    // Exact identities of the quadratic form.
    const double qx = value_form(x), qy = value_form(y), qcx = value_form(c * x);
    const double qs = value_form(x + y), qd = value_form(x - y);
    const double homog = qcx - c * c * qx;
    const double para = qs + qd - 2.0 * qx - 2.0 * qy;
    const double htol = 1e-12 * std::max(1.0, std::abs(qcx) + c * c * std::abs(qx));
    const double ptol = 1e-12 * std::max(1.0, std::abs(qs) + std::abs(qd) + 2.0 * std::abs(qx) + 2.0 * std::abs(qy));
    r.checks.push_back(make_check("quadratic_laws", "form:homogeneity", homog, 0.0, htol, std::abs(homog) <= htol));
    r.checks.push_back(make_check("quadratic_laws", "form:parallelogram", para, 0.0, ptol, std::abs(para) <= ptol));

    // Monte Carlo value estimates on common random numbers.
    const Policy fb = feedback();
    auto V = [&](const Vector& z) -> const PathRun& { return run("feedback@" + vec_label(z), fb, z, config_.seed); };
    const PathRun& Vx = V(x);
    const PathRun& Vy = V(y);
    const PathRun& Vcx = V(c * x);
    const PathRun& Vs = V(x + y);
    const PathRun& Vd = V(x - y);
    auto combined = [](std::initializer_list<std::pair<double, const CostEstimate*>> t) {
        double v = 0.0;
        for (const auto& [k, e] : t) v += k * k * e->std_error * e->std_error;
        return std::sqrt(v);
    };
    // Floor for pathwise-exact cancellation under linear feedback.
    constexpr double kRoundoff = 1e-10;

    const double mh = Vcx.cost.mean - c * c * Vx.cost.mean;
    const double mh_tol = 3.0 * combined({{1.0, &Vcx.cost}, {c * c, &Vx.cost}}) +
                          kRoundoff * (std::abs(Vcx.cost.mean) + c * c * std::abs(Vx.cost.mean));
    r.metrics.emplace_back("V(x)", Vx.cost.mean);
    r.metrics.emplace_back("V(cx)", Vcx.cost.mean);
    r.metrics.emplace_back("V(x+y)", Vs.cost.mean);
    r.metrics.emplace_back("V(x-y)", Vd.cost.mean);
    r.metrics.emplace_back("V(y)", Vy.cost.mean);
    r.checks.push_back(make_check("quadratic_laws", "mc:homogeneity", mh, 0.0, mh_tol, std::abs(mh) <= mh_tol));

    const double mp = Vs.cost.mean + Vd.cost.mean - 2.0 * Vx.cost.mean - 2.0 * Vy.cost.mean;
    const double mp_tol = 3.0 * combined({{1.0, &Vs.cost}, {1.0, &Vd.cost}, {2.0, &Vx.cost}, {2.0, &Vy.cost}}) +
                          kRoundoff * (std::abs(Vs.cost.mean) + std::abs(Vd.cost.mean) + 2.0 * std::abs(Vx.cost.mean) +
                                       2.0 * std::abs(Vy.cost.mean));
    r.checks.push_back(make_check("quadratic_laws", "mc:parallelogram", mp, 0.0, mp_tol, std::abs(mp) <= mp_tol));
    return r;
}

VerificationReport Evaluator::verify_dominance() {
    VerificationReport r;
    r.instance = name_;
    const PathRun& fb = run("feedback", feedback());
    const std::vector<std::pair<std::string, Policy>> suite{
        {"zero", ZeroPolicy{}},
        {"const:1", constant(1.0)},
        {"const:-1", constant(-1.0)},
        {"gain:-1", feedback(-1.0)},
        {"gain:0.5", feedback(0.5)},
        {"gain:2", feedback(2.0)},
        {"random:0", random_piecewise(10, 0)},
        {"random:1", random_piecewise(10, 1)},
    };
    for (const auto& [label, policy] : suite) {
        const PathRun& pr = run(label, policy);
        const SampleStats gap = paired(pr.costs, fb.costs);
        r.metrics.emplace_back("dominance:" + label, gap.mean);
        r.checks.push_back(make_check("dominance", label, pr.cost.mean, fb.cost.mean, 3.0 * gap.std_error,
                                      gap.mean >= -3.0 * gap.std_error));
        nonnegativity(r, label, pr.cost);
    }
    return r;
}

VerificationReport Evaluator::verify_crn() {
    VerificationReport r;
    r.instance = name_;
    const PathRun& fb = run("feedback", feedback());
    const PathRun& zero = run("zero", ZeroPolicy{});
    const PathRun& zero_ind = run("zero", ZeroPolicy{}, config_.x0, config_.seed + 1);
    const double paired_se = paired(zero.costs, fb.costs).std_error;
    const double indep_se = std::hypot(zero_ind.cost.std_error, fb.cost.std_error);
    r.metrics.emplace_back("crn:paired_stderr", paired_se);
    r.metrics.emplace_back("crn:independent_stderr", indep_se);
    // Rounding-level spread means the costs do not depend on the noise.
    if (indep_se <= 1e-12 * std::max(1.0, std::abs(fb.cost.mean))) {
        r.checks.push_back(make_check("crn", "paired<independent", paired_se, indep_se, 0.0, true,
                                      "not applicable: costs are deterministic"));
    } else {
        r.checks.push_back(make_check("crn", "paired<independent", paired_se, indep_se, 0.0, paired_se < indep_se));
    }
    return r;
}

VerificationReport Evaluator::verify_all() {
    VerificationReport r;
    r.instance = name_;
    r.append(verify_value_match());
    r.append(verify_completion_of_squares("zero", ZeroPolicy{}));
    r.append(verify_completion_of_squares("const:1", constant(1.0)));
    r.append(verify_completion_of_squares("gain:2", feedback(2.0)));
    r.append(verify_dpp("feedback", feedback(), true));
    r.append(verify_dpp("zero", ZeroPolicy{}, false));
    Vector y(spec_.dims.n);
    for (int i = 0; i < spec_.dims.n; ++i) y(i) = i % 2 == 0 ? 0.5 : -1.0;
    r.append(verify_quadratic_laws(config_.x0, y, 2.0));
    r.append(verify_dominance());
    r.append(verify_crn());
    return r;
}

}  // namespace slq
