#include "slq/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace slq {

const char* to_string(CoefficientMode mode) {
    switch (mode) {
    case CoefficientMode::Constant:
        return "constant";
    case CoefficientMode::TimeVarying:
        return "time_varying";
    case CoefficientMode::BrownianFunctional:
        return "brownian";
    }
    return "?";
}

namespace {

void check_extent(int rows, int cols) {
    if (rows < 1 || cols < 1 || rows > kMaxDim || cols > kMaxDim) {
        throw DimensionError("coefficient shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " outside [1, " + std::to_string(kMaxDim) + "]");
    }
}

void check_shape(const Matrix& m, int rows, int cols) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError("coefficient evaluated to " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", declared " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
}

}  // namespace

CoefficientProcess CoefficientProcess::constant(const Matrix& value, double bound) {
    check_extent(static_cast<int>(value.rows()), static_cast<int>(value.cols()));
    CoefficientProcess p;
    p.mode_ = CoefficientMode::Constant;
    p.rows_ = static_cast<int>(value.rows());
    p.cols_ = static_cast<int>(value.cols());
    p.bound_ = bound;
    p.known_zero_ = value.isZero(0.0);
    p.eval_ = [value](double, double, Matrix& out) { out = value; };
    return p;
}

CoefficientProcess CoefficientProcess::time_varying(int rows, int cols, std::function<Matrix(double)> fn,
                                                    double bound) {
    check_extent(rows, cols);
    CoefficientProcess p;
    p.mode_ = CoefficientMode::TimeVarying;
    p.rows_ = rows;
    p.cols_ = cols;
    p.bound_ = bound;
    p.eval_ = [fn = std::move(fn), rows, cols](double t, double, Matrix& out) {
        out = fn(t);
        check_shape(out, rows, cols);
    };
    return p;
}

CoefficientProcess CoefficientProcess::brownian(int rows, int cols, std::function<Matrix(double, double)> fn,
                                                double bound) {
    check_extent(rows, cols);
    CoefficientProcess p;
    p.mode_ = CoefficientMode::BrownianFunctional;
    p.rows_ = rows;
    p.cols_ = cols;
    p.bound_ = bound;
    p.eval_ = [fn = std::move(fn), rows, cols](double t, double w, Matrix& out) {
        out = fn(t, w);
        check_shape(out, rows, cols);
    };
    return p;
}

CoefficientProcess CoefficientProcess::from_expressions(CoefficientMode mode, int rows, int cols,
                                                        std::vector<Expression> entries, double bound) {
    check_extent(rows, cols);
    if (entries.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
        throw DimensionError("expression count does not match shape");
    }
    for (const auto& e : entries) {
        if (mode == CoefficientMode::Constant && (e.uses_time() || e.uses_brownian())) {
            throw ConfigError("constant coefficient entry '" + e.text() + "' depends on t or w");
        }
        if (mode == CoefficientMode::TimeVarying && e.uses_brownian()) {
            throw ConfigError("time_varying coefficient entry '" + e.text() + "' depends on w");
        }
    }
    if (mode == CoefficientMode::Constant) {
        Matrix value(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) value(i, j) = entries[static_cast<std::size_t>(i * cols + j)].evaluate(0, 0);
        return constant(value, bound);
    }
    CoefficientProcess p;
    p.mode_ = mode;
    p.rows_ = rows;
    p.cols_ = cols;
    p.bound_ = bound;
    p.eval_ = [entries = std::move(entries), rows, cols](double t, double w, Matrix& out) {
        out.resize(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) out(i, j) = entries[static_cast<std::size_t>(i * cols + j)].evaluate(t, w);
    };
    return p;
}

void CoefficientProcess::evaluate_into(double t, double w, Matrix& out) const {
    if (!eval_) throw ConfigError("coefficient process not populated");
    eval_(t, w, out);
}

Matrix CoefficientProcess::operator()(double t, double w) const {
    Matrix out;
    evaluate_into(t, w, out);
    return out;
}

CoefficientMode ProblemSpec::mode() const {
    CoefficientMode out = CoefficientMode::Constant;
    auto bump = [&out](const CoefficientProcess& p) { out = std::max(out, p.mode()); };
    bump(A);
    bump(B);
    for (const auto& c : C) bump(c);
    for (const auto& d : D) bump(d);
    bump(Q);
    bump(N);
    bump(M);
    return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

struct NamedProcess {
    std::string name;
    const CoefficientProcess* process;
    int rows;
    int cols;
};

std::vector<NamedProcess> named_processes(const ProblemSpec& spec) {
    const int n = spec.dims.n;
    const int m = spec.dims.m;
    std::vector<NamedProcess> out{{"A", &spec.A, n, n}, {"B", &spec.B, n, m}};
    for (std::size_t i = 0; i < spec.C.size(); ++i) out.push_back({"C" + std::to_string(i + 1), &spec.C[i], n, n});
    for (std::size_t i = 0; i < spec.D.size(); ++i) out.push_back({"D" + std::to_string(i + 1), &spec.D[i], n, m});
    out.push_back({"Q", &spec.Q, n, n});
    out.push_back({"N", &spec.N, m, m});
    out.push_back({"M", &spec.M, n, n});
    return out;
}

double min_eigenvalue(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

}  // namespace

ValidationReport validate(const ProblemSpec& spec) {
    ValidationReport report;
    auto add = [&report](std::string msg, double t = 0.0, double w = 0.0) {
        report.violations.push_back({std::move(msg), t, w});
    };

    const Dimensions& dims = spec.dims;
    if (dims.n < 1 || dims.m < 1 || dims.d < 1) add("dimensions must be positive");
    if (dims.n > kMaxDim || dims.m > kMaxDim) add("dimensions exceed supported maximum " + std::to_string(kMaxDim));
    if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon)) add("horizon T must be positive and finite");
    if (!(spec.delta > 0.0)) add("delta must be positive (A2)");
    if (spec.C.size() != static_cast<std::size_t>(dims.d)) add("C must hold d = " + std::to_string(dims.d) + " matrices");
    if (spec.D.size() != static_cast<std::size_t>(dims.d)) add("D must hold d = " + std::to_string(dims.d) + " matrices");
    if (!report.valid()) return report;

    const auto processes = named_processes(spec);
    bool shapes_ok = true;
    for (const auto& np : processes) {
        if (np.process->rows() != np.rows || np.process->cols() != np.cols) {
            add(np.name + " has shape " + std::to_string(np.process->rows()) + "x" +
                std::to_string(np.process->cols()) + ", expected " + std::to_string(np.rows) + "x" +
                std::to_string(np.cols));
            shapes_ok = false;
        }
    }
    if (!shapes_ok) return report;

    const CoefficientMode mode = spec.mode();
    if (mode == CoefficientMode::BrownianFunctional && dims.d != 1) {
        add("Brownian-functional coefficients require d = 1");
    }

    // Sample lattice; degenerate along axes the mode ignores.
    const double T = spec.horizon;
    const int nt = mode == CoefficientMode::Constant ? 1 : kSampleLattice;
    const int nw = mode == CoefficientMode::BrownianFunctional ? kSampleLattice : 1;
    auto t_at = [&](int i) { return nt == 1 ? 0.0 : T * i / (nt - 1); };
    auto w_at = [&](int j) { return nw == 1 ? 0.0 : -kSampleWMax + 2.0 * kSampleWMax * j / (nw - 1); };

    // Report only the first offending sample per (coefficient, property).
    std::vector<bool> seen(processes.size() * 4, false);
    auto once = [&](std::size_t idx, int prop, std::string msg, double t, double w) {
        const std::size_t key = idx * 4 + static_cast<std::size_t>(prop);
        if (!seen[key]) {
            seen[key] = true;
            add(std::move(msg), t, w);
        }
    };

    Matrix value;
    for (std::size_t idx = 0; idx < processes.size(); ++idx) {
        const auto& np = processes[idx];
        const bool terminal = np.name == "M";
        for (int i = 0; i < (terminal ? 1 : nt); ++i) {
            const double t = terminal ? T : t_at(i);
            for (int j = 0; j < nw; ++j) {
                const double w = w_at(j);
                try {
                    np.process->evaluate_into(t, w, value);
                } catch (const Error& e) {
                    once(idx, 0, np.name + " evaluation failed: " + e.what(), t, w);
                    continue;
                }
                if (!value.allFinite()) {
                    once(idx, 0, np.name + " not finite", t, w);
                    continue;
                }
                const double amax = value.cwiseAbs().maxCoeff();
                if (amax > np.process->bound()) {
                    once(idx, 1, np.name + " exceeds declared bound " + fmt(np.process->bound()) + " (A1): |entry| = " +
                                     fmt(amax),
                         t, w);
                }
                if (np.name == "Q" || np.name == "M" || np.name == "N") {
                    const double skew = (value - value.transpose()).cwiseAbs().maxCoeff();
                    if (skew > kPsdTolerance * std::max(1.0, amax)) {
                        once(idx, 2, np.name + " not symmetric", t, w);
                        continue;
                    }
                    const double lo = min_eigenvalue(symmetrize(value));
                    if (np.name == "N") {
                        if (lo < spec.delta) {
                            once(idx, 3, "N not uniformly positive (A2): smallest eigenvalue " + fmt(lo) +
                                             " below delta " + fmt(spec.delta),
                                 t, w);
                        }
                    } else if (lo < -kPsdTolerance) {
                        once(idx, 3, np.name + " not positive semidefinite (A1): smallest eigenvalue " + fmt(lo), t, w);
                    }
                }
            }
        }
    }
    return report;
}

void evaluate_coefficients_into(const ProblemSpec& spec, double t, double w, CoefficientSnapshot& snap) {
    if (!(t >= 0.0 && t <= spec.horizon)) {
        throw DomainError("time " + fmt(t) + " outside [0, " + fmt(spec.horizon) + "]");
    }
    if (!std::isfinite(w)) throw DomainError("Brownian value not finite");
    snap.t = t;
    snap.w = w;
    spec.A.evaluate_into(t, w, snap.A);
    spec.B.evaluate_into(t, w, snap.B);
    snap.C.resize(spec.C.size());
    snap.D.resize(spec.D.size());
    for (std::size_t i = 0; i < spec.C.size(); ++i) spec.C[i].evaluate_into(t, w, snap.C[i]);
    for (std::size_t i = 0; i < spec.D.size(); ++i) spec.D[i].evaluate_into(t, w, snap.D[i]);
    spec.Q.evaluate_into(t, w, snap.Q);
    spec.N.evaluate_into(t, w, snap.N);
}

CoefficientSnapshot evaluate_coefficients(const ProblemSpec& spec, double t, double w) {
    CoefficientSnapshot snap;
    evaluate_coefficients_into(spec, t, w, snap);
    return snap;
}

Matrix terminal_weight(const ProblemSpec& spec, double w) { return spec.M(spec.horizon, w); }

ProblemSpec make_constant_spec(const ConstantCoefficients& c) {
    ProblemSpec spec;
    spec.dims = {static_cast<int>(c.A.rows()), static_cast<int>(c.B.cols()), static_cast<int>(c.C.size())};
    spec.horizon = c.horizon;
    spec.A = CoefficientProcess::constant(c.A);
    spec.B = CoefficientProcess::constant(c.B);
    for (const auto& m : c.C) spec.C.push_back(CoefficientProcess::constant(m));
    for (const auto& m : c.D) spec.D.push_back(CoefficientProcess::constant(m));
    spec.Q = CoefficientProcess::constant(c.Q);
    spec.N = CoefficientProcess::constant(c.N);
    spec.M = CoefficientProcess::constant(c.M);
    if (c.delta > 0.0) {
        spec.delta = c.delta;
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(c.N), Eigen::EigenvaluesOnly);
        spec.delta = es.eigenvalues().minCoeff();
    }
    return spec;
}

ProblemSpec make_scalar_spec(double a, double b, double c, double d, double q, double n, double m,
                             double horizon) {
    auto s = [](double v) { return Matrix::Constant(1, 1, v); };
    return make_constant_spec({s(a), s(b), {s(c)}, {s(d)}, s(q), s(n), s(m), horizon, n > 0 ? n : 1.0});
}

}  // namespace slq
