#include "slq/bsre_pde.hpp"
#include "slq/config.hpp"
#include "slq/oracle_dp.hpp"
#include "slq/parallel.hpp"
#include "slq/riccati_ode.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace slq;

namespace {

const std::string kDir = SLQ_INSTANCE_DIR;

CoefficientProcess scalar_w(std::function<double(double)> f) {
    return CoefficientProcess::brownian(1, 1, [f](double, double w) { return Matrix::Constant(1, 1, f(w)); });
}

}  // namespace

TEST(BsrePde, DefaultResolution) {
    const ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, 1, 1, 0);
    const FieldConfig cfg = resolve_field_config(spec, {});
    EXPECT_EQ(cfg.space_nodes, 201);
    EXPECT_DOUBLE_EQ(cfg.w_max, 5.0);
    EXPECT_EQ(cfg.time_steps, 445);
}

TEST(BsrePde, GridIsSymmetric) {
    const RiccatiField f = solve_field(make_scalar_spec(0, 1, 0, 0, 1, 1, 0), {0, 51, 0});
    const auto& w = f.w_grid();
    for (std::size_t j = 0; j < w.size(); ++j) EXPECT_EQ(w[j], -w[w.size() - 1 - j]);
    EXPECT_EQ(w[w.size() / 2], 0.0);
}

TEST(BsrePde, ConstantCoefficientsAgreeWithOde) {
    const ProblemSpec spec = make_scalar_spec(0.2, 1, 0.3, 0.2, 1, 1, 1);
    const RiccatiField f = solve_field(spec);
    const RiccatiPath path = solve_backward(spec, 1000);
    EXPECT_NEAR(sample_solution(f, 0.0, 0.0).point.K(0, 0), path.K.front()(0, 0), 5e-4);
    // Spatially constant data stay constant, so L vanishes identically.
    EXPECT_EQ(f.sup_L_norm(), 0.0);
}

TEST(BsrePde, TerminalSliceIsM) {
    ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, 1, 1, 0);
    spec.M = scalar_w([](double w) { return 1.0 + 0.5 * std::tanh(w); });
    const RiccatiField f = solve_field(spec, {0, 101, 0});
    const std::size_t S = f.time_steps();
    for (std::size_t j = 0; j < f.space_nodes(); ++j) {
        EXPECT_EQ(f.K(S, j)(0, 0), 1.0 + 0.5 * std::tanh(f.w_grid()[j]));
    }
}

// Without control influence (B = 0) the lifted equation is the backward heat
// equation kappa_t + kappa_ww / 2 + Q(w) = 0. For Q = w^2 and M = 0,
// kappa(t, w) = w^2 tau + tau^2 / 2 and L = 2 w tau with tau = T - t.
TEST(BsrePde, HeatEquationLimit) {
    ProblemSpec spec = make_scalar_spec(0, 0, 0, 0, 1, 1, 0);
    spec.Q = scalar_w([](double w) { return w * w; });
    const RiccatiField f = solve_field(spec, {0, 201, 6.0});
    for (double w : {0.0, 0.5, 1.0, -1.5}) {
        const FieldSample s = sample_solution(f, 0.0, w);
        EXPECT_NEAR(s.point.K(0, 0), w * w + 0.5, 2e-3) << w;
        EXPECT_NEAR(s.point.L[0](0, 0), 2.0 * w, 1e-2) << w;
    }
}

TEST(BsrePde, EvenCoefficientsGiveEvenK) {
    ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, 1, 1, 0);
    spec.A = scalar_w([](double w) { return 0.1 * w * w / (1.0 + w * w); });
    const RiccatiField f = solve_field(spec, {0, 101, 0});
    const std::size_t J = f.space_nodes();
    for (std::size_t k = 0; k <= f.time_steps(); k += 50) {
        for (std::size_t j = 0; j < J; ++j) {
            EXPECT_EQ(f.K(k, j)(0, 0), f.K(k, J - 1 - j)(0, 0));
            EXPECT_EQ(f.L(k, j)(0, 0), -f.L(k, J - 1 - j)(0, 0));
        }
    }
}

TEST(BsrePde, StoredLIsTheDiscreteDerivative) {
    const Instance p2 = load_instance(kDir + "/p2.json");
    const RiccatiField f = solve_field(p2.spec, {0, 101, 0});
    const double dw = f.dw();
    const std::size_t J = f.space_nodes();
    for (std::size_t k = 0; k <= f.time_steps(); k += 37) {
        for (std::size_t j = 1; j + 1 < J; ++j) {
            const double central = (f.K(k, j + 1)(0, 0) - f.K(k, j - 1)(0, 0)) / (2.0 * dw);
            EXPECT_NEAR(f.L(k, j)(0, 0), central, 1e-15);
        }
        EXPECT_NEAR(f.L(k, 0)(0, 0), (f.K(k, 1)(0, 0) - f.K(k, 0)(0, 0)) / dw, 1e-15);
    }
}

TEST(BsrePde, BrownianInstanceAgreesWithTree) {
    const Instance p2 = load_instance(kDir + "/p2.json");
    const RiccatiField f = solve_field(p2.spec);
    const double pde = sample_solution(f, 0.0, 0.0).point.K(0, 0);
    const double tree = solve_tree(p2.spec, 200, TreeMode::Recombining).root()(0, 0);
    EXPECT_LE(std::abs(pde - tree) / tree, 0.02);
    // L does not vanish for w-dependent drift.
    EXPECT_GT(f.sup_L_norm(), 1e-4);
}

TEST(BsrePde, RejectsUnstableOrNarrowGrids) {
    const ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, 1, 1, 0);
    EXPECT_THROW(solve_field(spec, {100, 201, 5.0}), ConfigError);  // dt > dw^2
    EXPECT_THROW(solve_field(spec, {0, 201, 3.0}), ConfigError);    // W_max < 4 sqrt(T)
    ProblemSpec two = spec;
    two.dims.d = 2;
    two.C.push_back(CoefficientProcess::constant(Matrix::Zero(1, 1)));
    two.D.push_back(CoefficientProcess::constant(Matrix::Zero(1, 1)));
    EXPECT_THROW(solve_field(two), ConfigError);
}

TEST(BsrePde, SamplingReproducesNodesAndClampsOutside) {
    const Instance p2 = load_instance(kDir + "/p2.json");
    const RiccatiField f = solve_field(p2.spec, {0, 101, 0});
    const std::size_t k = 10, j = 37;
    const FieldSample s = sample_solution(f, f.t_grid()[k], f.w_grid()[j]);
    // Node values up to rounding in the interpolation weights.
    EXPECT_NEAR(s.point.K(0, 0), f.K(k, j)(0, 0), 1e-15);
    EXPECT_NEAR(s.point.L[0](0, 0), f.L(k, j)(0, 0), 1e-15);
    EXPECT_FALSE(s.clamped);
    const FieldSample out = sample_solution(f, 0.5, 100.0);
    EXPECT_TRUE(out.clamped);
    EXPECT_THROW(sample_solution(f, 1.5, 0.0), DomainError);
}

TEST(BsrePde, ThreadCountDoesNotChangeTheField) {
    const Instance p2 = load_instance(kDir + "/p2.json");
    set_thread_limit(1);
    const RiccatiField a = solve_field(p2.spec, {0, 101, 0});
    set_thread_limit(4);
    const RiccatiField b = solve_field(p2.spec, {0, 101, 0});
    set_thread_limit(0);
    std::ostringstream sa, sb;
    write_csv(sa, a);
    write_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(BsrePde, LMomentsBoundedByGridSupremum) {
    const Instance p2 = load_instance(kDir + "/p2.json");
    const RiccatiField f = solve_field(p2.spec);
    const LMomentReport r = sample_L_moments(f, 2000, 7);
    EXPECT_TRUE(r.all_finite);
    ASSERT_EQ(r.moments.size(), 3u);
    for (std::size_t i = 0; i < r.moments.size(); ++i) {
        EXPECT_GT(r.moments[i], 0.0);
        EXPECT_LE(r.moments[i], r.moment_bounds[i]);
    }
    EXPECT_LE(r.max_integral, r.integral_bound);
    // Jensen: E[I^2]^(1/2) <= E[I^4]^(1/4) <= E[I^8]^(1/8).
    EXPECT_LE(std::pow(r.moments[0], 0.5), std::pow(r.moments[1], 0.25) * (1 + 1e-12));
    EXPECT_LE(std::pow(r.moments[1], 0.25), std::pow(r.moments[2], 0.125) * (1 + 1e-12));
}
