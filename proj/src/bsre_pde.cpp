#include "slq/bsre_pde.hpp"

#include "slq/csv.hpp"
#include "slq/parallel.hpp"
#include "slq/riccati_ode.hpp"
#include "slq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slq {

RiccatiField::RiccatiField(std::vector<double> t_grid, std::vector<double> w_grid, int n)
    : t_grid_(std::move(t_grid)), w_grid_(std::move(w_grid)), n_(n) {
    const std::size_t total = t_grid_.size() * w_grid_.size() * static_cast<std::size_t>(n * n);
    K_.assign(total, 0.0);
    L_.assign(total, 0.0);
}

Matrix RiccatiField::K(std::size_t k, std::size_t j) const {
    return Eigen::Map<const Eigen::MatrixXd>(K_.data() + offset(k, j), n_, n_);
}

Matrix RiccatiField::L(std::size_t k, std::size_t j) const {
    return Eigen::Map<const Eigen::MatrixXd>(L_.data() + offset(k, j), n_, n_);
}

void RiccatiField::set_K(std::size_t k, std::size_t j, const Matrix& value) {
    Eigen::Map<Eigen::MatrixXd>(K_.data() + offset(k, j), n_, n_) = value;
}

void RiccatiField::set_L(std::size_t k, std::size_t j, const Matrix& value) {
    Eigen::Map<Eigen::MatrixXd>(L_.data() + offset(k, j), n_, n_) = value;
}

double RiccatiField::sup_L_norm() const {
    double best = 0.0;
    const auto nn = static_cast<std::size_t>(n_ * n_);
    for (std::size_t off = 0; off < L_.size(); off += nn) {
        double s = 0.0;
        for (std::size_t i = 0; i < nn; ++i) s += L_[off + i] * L_[off + i];
        best = std::max(best, std::sqrt(s));
    }
    return best;
}

FieldConfig resolve_field_config(const ProblemSpec& spec, const FieldConfig& config) {
    FieldConfig out = config;
    const double T = spec.horizon;
    if (out.w_max <= 0.0) out.w_max = 5.0 * std::sqrt(T);
    if (out.space_nodes < 3) throw ConfigError("field solver needs at least 3 space nodes");
    const double dw = 2.0 * out.w_max / (out.space_nodes - 1);
    if (out.time_steps <= 0) out.time_steps = static_cast<int>(std::ceil(T / (0.9 * dw * dw)));
    return out;
}

namespace {

void build_L_slice(RiccatiField& field, std::size_t k) {
    const std::size_t J = field.space_nodes();
    const double dw = field.dw();
    for (std::size_t j = 0; j < J; ++j) {
        Matrix L;
        if (j == 0) {
            L = (field.K(k, 1) - field.K(k, 0)) / dw;
        } else if (j + 1 == J) {
            L = (field.K(k, J - 1) - field.K(k, J - 2)) / dw;
        } else {
            L = (field.K(k, j + 1) - field.K(k, j - 1)) / (2.0 * dw);
        }
        field.set_L(k, j, L);
    }
}

}  // namespace

RiccatiField solve_field(const ProblemSpec& spec, const FieldConfig& config) {
    if (spec.dims.d != 1) throw ConfigError("field solver requires a scalar Brownian driver (d = 1)");
    const FieldConfig cfg = resolve_field_config(spec, config);
    const double T = spec.horizon;
    const int S = cfg.time_steps;
    const int J = cfg.space_nodes;
    const double dt = T / S;
    const double dw = 2.0 * cfg.w_max / (J - 1);
    if (cfg.w_max < 4.0 * std::sqrt(T)) {
        throw ConfigError("W_max = " + std::to_string(cfg.w_max) + " below 4 sqrt(T)");
    }
    if (dt > dw * dw) {
        throw ConfigError("explicit scheme unstable: dt = " + std::to_string(dt) + " exceeds dw^2 = " +
                          std::to_string(dw * dw));
    }

    std::vector<double> t_grid(static_cast<std::size_t>(S) + 1);
    for (int k = 0; k <= S; ++k) t_grid[static_cast<std::size_t>(k)] = T * k / S;
    t_grid.back() = T;
    // Centered integer offsets keep the grid exactly symmetric about w = 0.
    std::vector<double> w_grid(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) w_grid[static_cast<std::size_t>(j)] = (j - 0.5 * (J - 1)) * dw;

    const int n = spec.dims.n;
    RiccatiField field(t_grid, w_grid, n);
    const auto Sz = static_cast<std::size_t>(S);
    const auto Jz = static_cast<std::size_t>(J);
    for (std::size_t j = 0; j < Jz; ++j) field.set_K(Sz, j, terminal_weight(spec, w_grid[j]));
    build_L_slice(field, Sz);

    const double inv_dw2 = 1.0 / (dw * dw);
    const double inv_2dw = 1.0 / (2.0 * dw);
    for (std::size_t k = Sz; k > 0; --k) {
        const double t = t_grid[k];
        parallel_for(Jz, [&](std::size_t begin, std::size_t end) {
            CoefficientSnapshot snap;
            RiccatiPoint point;
            point.L.resize(1);
            for (std::size_t j = begin; j < end; ++j) {
                const Matrix Kc = field.K(k, j);
                // Neumann closure: mirror ghost node, so kappa_w = 0 on the boundary.
                const Matrix Km = field.K(k, j == 0 ? 1 : j - 1);
                const Matrix Kp = field.K(k, j + 1 == Jz ? Jz - 2 : j + 1);
                const Matrix diffusion = ((Kp + Km) - 2.0 * Kc) * inv_dw2;
                point.K = Kc;
                point.L[0] = (Kp - Km) * inv_2dw;
                evaluate_coefficients_into(spec, t, w_grid[j], snap);
                const Matrix next = Kc + dt * (0.5 * diffusion + eval_G(snap, point));
                field.set_K(k - 1, j, project_psd(next, kPsdClampTolerance));
            }
        });
        build_L_slice(field, k - 1);
    }
    return field;
}

bool sample_into(const RiccatiField& field, double t, double w, RiccatiPoint& out) {
    const double T = field.horizon();
    if (!(t >= 0.0 && t <= T)) throw DomainError("field sample time " + std::to_string(t) + " outside [0, T]");
    const std::size_t S = field.time_steps();
    const std::size_t J = field.space_nodes();
    const int n = field.n();
    const auto nn = static_cast<std::size_t>(n * n);

    double tk = t / field.dt();
    auto k = static_cast<std::size_t>(std::floor(tk));
    if (k >= S) k = S - 1;
    const double at = std::clamp(tk - static_cast<double>(k), 0.0, 1.0);

    bool clamped = false;
    const double wmax = field.w_max();
    double wc = w;
    if (wc < -wmax) {
        wc = -wmax;
        clamped = true;
    } else if (wc > wmax) {
        wc = wmax;
        clamped = true;
    }
    const double wj = (wc + wmax) / field.dw();
    auto j = static_cast<std::size_t>(std::floor(wj));
    if (j >= J - 1) j = J - 2;
    const double aw = std::clamp(wj - static_cast<double>(j), 0.0, 1.0);

    const double c00 = (1.0 - at) * (1.0 - aw);
    const double c01 = (1.0 - at) * aw;
    const double c10 = at * (1.0 - aw);
    const double c11 = at * aw;
    const std::size_t o00 = field.offset(k, j);
    const std::size_t o01 = field.offset(k, j + 1);
    const std::size_t o10 = field.offset(k + 1, j);
    const std::size_t o11 = field.offset(k + 1, j + 1);

    out.K.resize(n, n);
    if (out.L.size() != 1) out.L.resize(1);
    out.L[0].resize(n, n);
    double* K = out.K.data();
    double* L = out.L[0].data();
    for (std::size_t i = 0; i < nn; ++i) {
        K[i] = c00 * field.K_[o00 + i] + c01 * field.K_[o01 + i] + c10 * field.K_[o10 + i] + c11 * field.K_[o11 + i];
        L[i] = c00 * field.L_[o00 + i] + c01 * field.L_[o01 + i] + c10 * field.L_[o10 + i] + c11 * field.L_[o11 + i];
    }
    return clamped;
}

FieldSample sample_solution(const RiccatiField& field, double t, double w) {
    FieldSample s;
    s.clamped = sample_into(field, t, w, s.point);
    return s;
}

void write_csv(std::ostream& os, const RiccatiField& field) {
    const int n = field.n();
    CsvWriter csv(os);
    std::vector<std::string> header{"t", "w"};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) header.push_back("K" + std::to_string(i) + std::to_string(j));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) header.push_back("L" + std::to_string(i) + std::to_string(j));
    csv.header(header);
    for (std::size_t k = 0; k < field.t_grid().size(); ++k) {
        for (std::size_t j = 0; j < field.space_nodes(); ++j) {
            csv.field(field.t_grid()[k]);
            csv.field(field.w_grid()[j]);
            csv.row_major(field.K(k, j));
            csv.row_major(field.L(k, j));
            csv.end_row();
        }
    }
}

LMomentReport sample_L_moments(const RiccatiField& field, std::size_t paths, std::uint64_t seed,
                               const std::vector<int>& powers) {
    LMomentReport r;
    r.paths = paths;
    r.powers = powers;
    const double T = field.horizon();
    const double sup = field.sup_L_norm();
    r.integral_bound = T * sup * sup;

    const std::size_t S = field.time_steps();
    const double dt = field.dt();
    const double sqdt = std::sqrt(dt);
    std::vector<double> integral(paths, 0.0);
    std::vector<std::size_t> clamps(paths, 0);
    parallel_for(paths, [&](std::size_t begin, std::size_t end) {
        RiccatiPoint point;
        point.L.resize(1);
        for (std::size_t p = begin; p < end; ++p) {
            NormalStream normals(seed, p);
            double w = 0.0;
            double acc = 0.0;
            for (std::size_t k = 0; k < S; ++k) {
                if (sample_into(field, field.t_grid()[k], w, point)) ++clamps[p];
                acc += point.L[0].squaredNorm() * dt;
                w += sqdt * normals.next();
            }
            integral[p] = acc;
        }
    });

    for (std::size_t p = 0; p < paths; ++p) {
        if (!std::isfinite(integral[p])) r.all_finite = false;
        r.max_integral = std::max(r.max_integral, integral[p]);
        r.clamped_samples += clamps[p];
    }
    for (int p : powers) {
        double sum = 0.0;
        for (double v : integral) sum += std::pow(v, p);
        r.moments.push_back(paths ? sum / static_cast<double>(paths) : 0.0);
        r.moment_bounds.push_back(std::pow(r.integral_bound, p));
    }
    return r;
}

}  // namespace slq
