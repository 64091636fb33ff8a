#include "slq/sde_sim.hpp"

#include "slq/csv.hpp"
#include "slq/parallel.hpp"
#include "slq/rng.hpp"
#include "slq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

namespace slq {

Vector TrajectoryBatch::state(std::size_t p, std::size_t r) const {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = x(p, r, i);
    return v;
}

Vector TrajectoryBatch::stopped_state(std::size_t p) const {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = stop_state[p * static_cast<std::size_t>(n) + i];
    return v;
}

int TrajectoryBatch::record_index(int step) const {
    const auto it = std::lower_bound(recorded.begin(), recorded.end(), step);
    if (it == recorded.end() || *it != step) return -1;
    return static_cast<int>(it - recorded.begin());
}

Matrix FlowBatch::phi(std::size_t p, std::size_t r) const {
    const auto nn = static_cast<std::size_t>(n * n);
    return Eigen::Map<const Eigen::MatrixXd>(Phi.data() + (p * recorded.size() + r) * nn, n, n);
}

Matrix FlowBatch::psi(std::size_t p, std::size_t r) const {
    const auto nn = static_cast<std::size_t>(n * n);
    return Eigen::Map<const Eigen::MatrixXd>(Psi.data() + (p * recorded.size() + r) * nn, n, n);
}

namespace {

constexpr double kMaxRecordedDoubles = 2.5e8;  // ~2 GB

std::vector<int> recorded_steps(int steps, int stride) {
    std::vector<int> out{0};
    if (stride > 0) {
        for (int k = stride; k < steps; k += stride) out.push_back(k);
    }
    out.push_back(steps);
    return out;
}

std::vector<double> time_grid(double T, int steps) {
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) t[static_cast<std::size_t>(k)] = T * k / steps;
    t.back() = T;
    return t;
}

void check_config(const ProblemSpec& spec, const SimConfig& config) {
    if (config.steps < 1) throw ConfigError("simulation needs at least one step");
    if (config.paths < 1) throw ConfigError("simulation needs at least one path");
    if (config.x0.size() != spec.dims.n) throw DimensionError("x0 must have n entries");
    if (config.record_stride < 0) throw ConfigError("record_stride must be nonnegative");
    if (config.brownian_refinement < 1) throw ConfigError("brownian_refinement must be at least 1");
    if (!spec.is_deterministic() && spec.dims.d != 1) {
        throw ConfigError("Brownian-functional coefficients require d = 1");
    }
}


/// Gains along a solution: tabulated per step when they depend on t only,
/// evaluated per (t, w) otherwise.
class GainSource {
public:
    GainSource(const RiccatiSolution* sol, const std::vector<CoefficientSnapshot>* table,
               const std::vector<double>& times)
        : sol_(sol) {
        if (sol_ == nullptr) return;
        if (table != nullptr && !depends_on_brownian(*sol_)) {
            tabulated_ = true;
            theta_.resize(times.size());
            hessian_.resize(times.size());
            RiccatiPoint point;
            for (std::size_t k = 0; k < times.size(); ++k) {
                solution_point_into(*sol_, times[k], 0.0, point);
                theta_[k] = feedback_gain((*table)[k], point, hessian_[k]);
            }
        }
    }

    [[nodiscard]] bool active() const noexcept { return sol_ != nullptr; }
    [[nodiscard]] bool tabulated() const noexcept { return tabulated_; }
    [[nodiscard]] const Matrix& theta(std::size_t k) const { return theta_[k]; }
    [[nodiscard]] const Matrix& hessian(std::size_t k) const { return hessian_[k]; }

    void at(std::size_t k, double t, double w, const CoefficientSnapshot& snap, RiccatiPoint& scratch,
            Matrix& theta, Matrix& hessian) const {
        if (tabulated_) {
            theta = theta_[k];
            hessian = hessian_[k];
            return;
        }
        solution_point_into(*sol_, t, w, scratch);
        theta = feedback_gain(snap, scratch, hessian);
    }

private:
    const RiccatiSolution* sol_ = nullptr;
    bool tabulated_ = false;
    std::vector<Matrix> theta_;
    std::vector<Matrix> hessian_;
};

}  // namespace

namespace {

template <int R, int C>
using Mat = std::conditional_t<R == Eigen::Dynamic || C == Eigen::Dynamic, Matrix, Eigen::Matrix<double, R, C>>;

template <int R>
using Vec = std::conditional_t<R == Eigen::Dynamic, Vector, Eigen::Matrix<double, R, 1>>;

/// Coefficients of one step in the kernel's matrix types.
template <int NF, int MF>
struct StepCoefficients {
    Mat<NF, NF> A, Q;
    Mat<NF, MF> B;
    Mat<MF, MF> N;
    std::vector<Mat<NF, NF>> C;
    std::vector<Mat<NF, MF>> D;

    void load(const CoefficientSnapshot& s) {
        A = s.A;
        Q = s.Q;
        B = s.B;
        N = s.N;
        C.resize(s.C.size());
        D.resize(s.D.size());
        for (std::size_t i = 0; i < s.C.size(); ++i) {
            C[i] = s.C[i];
            D[i] = s.D[i];
        }
    }
};

struct SimContext {
    const ProblemSpec& spec;
    const SimConfig& config;
    TrajectoryBatch& b;
    const std::vector<CoefficientSnapshot>* table;  // deterministic specs only
    const FeedbackPolicy* feedback;
    const OpenLoopPolicy* open_loop;
    const ReplayPolicy* replay;
    const GainSource& policy_gain;
    const GainSource& reference_gain;
    bool has_reference;
    bool shared_reference;
};

template <int NF, int MF>
void run_kernel(const SimContext& c) {
    using Step = StepCoefficients<NF, MF>;
    TrajectoryBatch& b = c.b;
    const ProblemSpec& spec = c.spec;
    const int n = b.n, m = b.m, d = b.d;
    const int S = b.steps;
    const std::size_t R = b.records();
    const double T = spec.horizon;
    const double dt = b.dt;
    const double sqdt = std::sqrt(dt);
    const double level = c.config.truncation_level;
    const int refine = c.config.brownian_refinement;
    const double fine_sqdt = std::sqrt(dt / refine);
    const bool deterministic = c.table != nullptr;

    // Tabulated coefficients and gains in kernel types.
    std::vector<Step> steps;
    Mat<NF, NF> M_const;
    if (deterministic) {
        steps.resize(c.table->size());
        for (std::size_t k = 0; k < steps.size(); ++k) steps[k].load((*c.table)[k]);
        M_const = terminal_weight(spec, 0.0);
    }
    auto tabulate = [&](const GainSource& src, std::vector<Mat<MF, NF>>& theta, std::vector<Mat<MF, MF>>& hess) {
        if (!src.tabulated()) return;
        theta.resize(b.times.size());
        hess.resize(b.times.size());
        for (std::size_t k = 0; k < b.times.size(); ++k) {
            theta[k] = src.theta(k);
            hess[k] = src.hessian(k);
        }
    };
    std::vector<Mat<MF, NF>> pol_theta, ref_theta_tab;
    std::vector<Mat<MF, MF>> pol_hess, ref_hess_tab;
    tabulate(c.policy_gain, pol_theta, pol_hess);
    tabulate(c.reference_gain, ref_theta_tab, ref_hess_tab);
    std::vector<Vec<MF>> open_grid;
    if (c.open_loop != nullptr)
        for (const auto& v : c.open_loop->grid) open_grid.push_back(v);

    parallel_for(b.paths, [&](std::size_t begin, std::size_t end) {
        CoefficientSnapshot snap;
        Step local_now, local_next;
        RiccatiPoint point;
        Matrix theta_dyn, hess_dyn;
        Mat<MF, NF> theta, ref_theta;
        Mat<MF, MF> hessian, ref_hessian;
        Vec<NF> x(n), x_next(n);
        Vec<MF> u(m), du(m);
        Vector dw(d), w(d);
        if constexpr (MF != Eigen::Dynamic) {
            theta.setZero();
            hessian.setZero();
        }
        for (std::size_t p = begin; p < end; ++p) {
            NormalStream normals(c.config.seed, p);
            x = c.config.x0;
            w.setZero(d);
            std::size_t rec = 0;
            auto store_state = [&](std::size_t r) {
                for (int i = 0; i < n; ++i) b.X[(p * R + r) * n + i] = x(i);
                for (int i = 0; i < d; ++i) b.W[(p * R + r) * d + i] = w(i);
            };
            store_state(rec++);

            const Step* now = nullptr;
            if (deterministic) {
                now = &steps[0];
            } else {
                evaluate_coefficients_into(spec, 0.0, w(0), snap);
                local_now.load(snap);
                now = &local_now;
            }
            double q_now = x.dot(now->Q * x);
            double running = 0.0;
            double interval_cost = 0.0;
            double penalty = 0.0;
            int stop = S;

            for (int k = 0; k < S; ++k) {
                const auto kz = static_cast<std::size_t>(k);
                const double t = b.times[kz];
                if (refine == 1) {
                    for (int i = 0; i < d; ++i) dw(i) = sqdt * normals.next();
                } else {
                    dw.setZero(d);
                    for (int j = 0; j < refine; ++j)
                        for (int i = 0; i < d; ++i) dw(i) += fine_sqdt * normals.next();
                }

                // Control at the left endpoint.
                if (c.feedback != nullptr) {
                    if (!pol_theta.empty()) {
                        theta = pol_theta[kz];
                        hessian = pol_hess[kz];
                    } else {
                        c.policy_gain.at(kz, t, w(0), deterministic ? (*c.table)[kz] : snap, point, theta_dyn, hess_dyn);
                        theta = theta_dyn;
                        hessian = hess_dyn;
                    }
                    u.noalias() = -c.feedback->scale * (theta * x);
                } else if (c.open_loop != nullptr) {
                    const std::size_t G = open_grid.size();
                    const auto g = std::min(G - 1, static_cast<std::size_t>(std::floor(t / T * static_cast<double>(G))));
                    u = open_grid[g];
                } else if (c.replay != nullptr) {
                    const TrajectoryBatch& src = *c.replay->batch;
                    for (int i = 0; i < m; ++i) u(i) = src.u(p, kz, i);
                } else {
                    u.setZero(m);
                }

                if (c.has_reference) {
                    if (c.shared_reference) {
                        ref_theta = theta;
                        ref_hessian = hessian;
                    } else if (!ref_theta_tab.empty()) {
                        ref_theta = ref_theta_tab[kz];
                        ref_hessian = ref_hess_tab[kz];
                    } else {
                        c.reference_gain.at(kz, t, w(0), deterministic ? (*c.table)[kz] : snap, point, theta_dyn, hess_dyn);
                        ref_theta = theta_dyn;
                        ref_hessian = hess_dyn;
                    }
                    du.noalias() = u + ref_theta * x;
                    penalty += dt * du.dot(ref_hessian * du);
                }

                x_next = x;
                x_next.noalias() += dt * (now->A * x);
                x_next.noalias() += dt * (now->B * u);
                for (int i = 0; i < d; ++i) {
                    x_next.noalias() += dw(i) * (now->C[static_cast<std::size_t>(i)] * x);
                    x_next.noalias() += dw(i) * (now->D[static_cast<std::size_t>(i)] * u);
                }
                if (!x_next.allFinite()) {
                    throw DivergenceError("state diverged on path " + std::to_string(p) + " at step " +
                                              std::to_string(k + 1),
                                          p, static_cast<std::size_t>(k) + 1);
                }
                const double control_cost = u.dot(now->N * u);
                w += dw;
                x = x_next;

                const Step* next = nullptr;
                if (deterministic) {
                    next = &steps[kz + 1];
                } else {
                    evaluate_coefficients_into(spec, b.times[kz + 1], w(0), snap);
                    local_next.load(snap);
                    next = &local_next;
                }
                const double q_next = x.dot(next->Q * x);
                const double inc = dt * (0.5 * (q_now + q_next) + control_cost);
                running += inc;
                interval_cost += inc;
                q_now = q_next;
                if (deterministic) {
                    now = next;
                } else {
                    std::swap(local_now, local_next);
                    now = &local_now;
                }

                if (rec - 1 < R - 1 && b.recorded[rec - 1] == k) {
                    for (int i = 0; i < m; ++i) b.U[(p * (R - 1) + rec - 1) * m + i] = u(i);
                }
                if (b.recorded[rec] == k + 1) {
                    b.running_cost[p * (R - 1) + rec - 1] = interval_cost;
                    interval_cost = 0.0;
                    store_state(rec++);
                }
                if (level > 0.0 && x.norm() >= level) {
                    stop = k + 1;
                    break;
                }
            }

            if (stop < S) {
                // Freeze the remaining records at the stopped state.
                if (b.recorded[rec - 1] != stop) {
                    b.running_cost[p * (R - 1) + rec - 1] = interval_cost;
                }
                while (rec < R) store_state(rec++);
            }
            b.stop_step[p] = stop;
            for (int i = 0; i < n; ++i) b.stop_state[p * n + i] = x(i);
            for (int i = 0; i < d; ++i) b.stop_w[p * d + i] = w(i);
            b.total_running[p] = running;
            b.penalty[p] = penalty;
            if (stop == S) {
                b.terminal_cost[p] = deterministic ? x.dot(M_const * x) : x.dot(Mat<NF, NF>(terminal_weight(spec, w(0))) * x);
            }
        }
    });
}

}  // namespace

TrajectoryBatch simulate(const ProblemSpec& spec, const SimConfig& config, const Policy& policy,
                         const RiccatiSolution* penalty_reference) {
    check_config(spec, config);
    const int n = spec.dims.n;
    const int m = spec.dims.m;
    const int d = spec.dims.d;
    const int S = config.steps;
    const std::size_t P = config.paths;
    const double T = spec.horizon;

    TrajectoryBatch b;
    b.paths = P;
    b.steps = S;
    b.n = n;
    b.m = m;
    b.d = d;
    b.dt = T / S;
    b.times = time_grid(T, S);
    b.recorded = recorded_steps(S, config.record_stride);
    const std::size_t R = b.recorded.size();
    const double volume = static_cast<double>(P) * static_cast<double>(R) * (n + m + d + 1);
    if (volume > kMaxRecordedDoubles) {
        throw ConfigError("recorded trajectories too large; increase record_stride");
    }
    b.W.assign(P * R * d, 0.0);
    b.X.assign(P * R * n, 0.0);
    b.U.assign(P * (R - 1) * m, 0.0);
    b.running_cost.assign(P * (R - 1), 0.0);
    b.terminal_cost.assign(P, 0.0);
    b.total_running.assign(P, 0.0);
    b.penalty.assign(P, 0.0);
    b.stop_step.assign(P, S);
    b.stop_state.assign(P * n, 0.0);
    b.stop_w.assign(P * d, 0.0);
    b.has_penalty = penalty_reference != nullptr;

    const ReplayPolicy* replay = std::get_if<ReplayPolicy>(&policy);
    if (replay != nullptr) {
        const TrajectoryBatch& src = *replay->batch;
        if (src.steps != S || src.paths < P || src.m != m || src.records() != static_cast<std::size_t>(S) + 1) {
            throw ConfigError("replay batch must match steps, control dimension and be recorded at stride 1");
        }
    }
    const OpenLoopPolicy* open_loop = std::get_if<OpenLoopPolicy>(&policy);
    if (open_loop != nullptr) {
        if (open_loop->grid.empty()) throw ConfigError("open-loop policy has an empty grid");
        for (const auto& v : open_loop->grid)
            if (v.size() != m) throw DimensionError("open-loop control must have m entries");
    }
    const FeedbackPolicy* feedback = std::get_if<FeedbackPolicy>(&policy);
    if (feedback != nullptr && !feedback->solution) throw ConfigError("feedback policy without a Riccati solution");

    const bool deterministic = spec.is_deterministic();
    std::vector<CoefficientSnapshot> table;
    if (deterministic) {
        table.resize(static_cast<std::size_t>(S) + 1);
        for (int k = 0; k <= S; ++k) evaluate_coefficients_into(spec, b.times[static_cast<std::size_t>(k)], 0.0, table[static_cast<std::size_t>(k)]);
    }
    const std::vector<CoefficientSnapshot>* table_ptr = deterministic ? &table : nullptr;

    const GainSource policy_gain(feedback ? feedback->solution.get() : nullptr, table_ptr, b.times);
    const bool shared_reference =
        penalty_reference != nullptr && feedback != nullptr && penalty_reference == feedback->solution.get();
    const GainSource reference_gain(shared_reference ? nullptr : penalty_reference, table_ptr, b.times);

    const SimContext ctx{spec,      config,      b,           table_ptr, feedback, open_loop, replay, policy_gain,
                         reference_gain, penalty_reference != nullptr, shared_reference};
    if (n == 1 && m == 1) {
        run_kernel<1, 1>(ctx);
    } else if (n == 2 && m == 2) {
        run_kernel<2, 2>(ctx);
    } else if (n == 2 && m == 1) {
        run_kernel<2, 1>(ctx);
    } else {
        run_kernel<Eigen::Dynamic, Eigen::Dynamic>(ctx);
    }
    b.truncated = static_cast<std::size_t>(std::count_if(b.stop_step.begin(), b.stop_step.end(), [S](int s) { return s < S; }));
    return b;
}

FlowBatch simulate_flows(const ProblemSpec& spec, const SimConfig& config) {
    if (config.steps < 1 || config.paths < 1) throw ConfigError("flow simulation needs steps >= 1 and paths >= 1");
    if (!spec.is_deterministic() && spec.dims.d != 1) throw ConfigError("Brownian-functional coefficients require d = 1");
    const int n = spec.dims.n;
    const int d = spec.dims.d;
    const int S = config.steps;
    const std::size_t P = config.paths;
    const auto nn = static_cast<std::size_t>(n * n);

    FlowBatch f;
    f.paths = P;
    f.steps = S;
    f.n = n;
    f.times = time_grid(spec.horizon, S);
    f.recorded = recorded_steps(S, config.record_stride);
    const std::size_t R = f.recorded.size();
    f.Phi.assign(P * R * nn, 0.0);
    f.Psi.assign(P * R * nn, 0.0);
    f.max_defect.assign(P, 0.0);
    const double dt = spec.horizon / S;
    const int refine = config.brownian_refinement;
    if (refine < 1) throw ConfigError("brownian_refinement must be at least 1");
    const double fine_sqdt = std::sqrt(dt / refine);

    parallel_for(P, [&](std::size_t begin, std::size_t end) {
        CoefficientSnapshot snap;
        Matrix phi, psi, drift_psi;
        Vector dw(d);
        const Matrix I = Matrix::Identity(n, n);
        for (std::size_t p = begin; p < end; ++p) {
            NormalStream normals(config.seed, p);
            phi = I;
            psi = I;
            double w = 0.0;
            std::size_t rec = 0;
            auto store = [&](std::size_t r) {
                Eigen::Map<Eigen::MatrixXd>(f.Phi.data() + (p * R + r) * nn, n, n) = phi;
                Eigen::Map<Eigen::MatrixXd>(f.Psi.data() + (p * R + r) * nn, n, n) = psi;
            };
            store(rec++);
            double worst = 0.0;
            for (int k = 0; k < S; ++k) {
                dw.setZero(d);
                for (int j = 0; j < refine; ++j)
                    for (int i = 0; i < d; ++i) dw(i) += fine_sqdt * normals.next();
                evaluate_coefficients_into(spec, f.times[static_cast<std::size_t>(k)], w, snap);
                Matrix phi_next = phi + dt * (snap.A * phi);
                drift_psi = -snap.A;
                for (int i = 0; i < d; ++i) drift_psi += snap.C[static_cast<std::size_t>(i)] * snap.C[static_cast<std::size_t>(i)];
                Matrix psi_next = psi + dt * (psi * drift_psi);
                for (int i = 0; i < d; ++i) {
                    phi_next += dw(i) * (snap.C[static_cast<std::size_t>(i)] * phi);
                    psi_next -= dw(i) * (psi * snap.C[static_cast<std::size_t>(i)]);
                }
                phi = phi_next;
                psi = psi_next;
                if (d > 0) w += dw(0);
                if (!phi.allFinite() || !psi.allFinite()) {
                    throw DivergenceError("flow diverged on path " + std::to_string(p) + " at step " + std::to_string(k + 1),
                                          p, static_cast<std::size_t>(k) + 1);
                }
                const double defect = (phi * psi - I).cwiseAbs().rowwise().sum().maxCoeff();
                worst = std::max(worst, defect);
                if (f.recorded[rec] == k + 1) store(rec++);
            }
            f.max_defect[p] = worst;
        }
    });
    return f;
}

void write_trajectories_csv(std::ostream& os, const TrajectoryBatch& b) {
    CsvWriter csv(os);
    std::vector<std::string> header{"path", "k", "t"};
    for (int i = 0; i < b.d; ++i) header.push_back("W" + std::to_string(i));
    for (int i = 0; i < b.n; ++i) header.push_back("X" + std::to_string(i));
    for (int i = 0; i < b.m; ++i) header.push_back("u" + std::to_string(i));
    header.push_back("cost");
    csv.header(header);
    const std::size_t R = b.records();
    for (std::size_t p = 0; p < b.paths; ++p) {
        for (std::size_t r = 0; r < R; ++r) {
            const int k = b.recorded[r];
            csv.field(p);
            csv.field(k);
            csv.field(b.times[static_cast<std::size_t>(k)]);
            for (int i = 0; i < b.d; ++i) csv.field(b.w(p, r, i));
            for (int i = 0; i < b.n; ++i) csv.field(b.x(p, r, i));
            if (r + 1 < R) {
                for (int i = 0; i < b.m; ++i) csv.field(b.u(p, r, i));
                csv.field(b.running_cost[p * (R - 1) + r]);
            } else {
                for (int i = 0; i <= b.m; ++i) csv.field(std::string());
            }
            csv.end_row();
        }
    }
}

void write_summary_csv(std::ostream& os, const ProblemSpec& spec, const TrajectoryBatch& b) {
    (void)spec;
    CsvWriter csv(os);
    csv.header({"quantity", "mean", "stderr", "min", "max"});
    auto emit = [&](const std::string& name, const std::vector<double>& v) {
        const SampleStats s = sample_stats(v);
        csv.field(name);
        csv.field(s.mean);
        csv.field(s.std_error);
        csv.field(*std::min_element(v.begin(), v.end()));
        csv.field(*std::max_element(v.begin(), v.end()));
        csv.end_row();
    };
    std::vector<double> v(b.paths);
    for (int i = 0; i < b.n; ++i) {
        for (std::size_t p = 0; p < b.paths; ++p) v[p] = b.stop_state[p * b.n + i];
        emit("X_T" + std::to_string(i), v);
    }
    for (int i = 0; i < b.d; ++i) {
        for (std::size_t p = 0; p < b.paths; ++p) v[p] = b.stop_w[p * b.d + i];
        emit("W_T" + std::to_string(i), v);
    }
    emit("terminal_cost", b.terminal_cost);
    emit("running_cost", b.total_running);
    for (std::size_t p = 0; p < b.paths; ++p) v[p] = b.terminal_cost[p] + b.total_running[p];
    emit("total_cost", v);
    if (b.has_penalty) emit("penalty", b.penalty);
}

}  // namespace slq
