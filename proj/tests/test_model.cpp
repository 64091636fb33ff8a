#include "slq/model.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace slq;

namespace {

bool mentions(const ValidationReport& r, const std::string& s) {
    for (const auto& v : r.violations)
        if (v.message.find(s) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(Model, ScalarSpecIsValid) {
    const ProblemSpec spec = make_scalar_spec(0.2, 1.0, 0.3, 0.2, 1.0, 1.0, 1.0);
    EXPECT_TRUE(validate(spec).valid());
    EXPECT_EQ(spec.mode(), CoefficientMode::Constant);
    EXPECT_TRUE(spec.is_deterministic());
}

TEST(Model, ZeroNViolatesUniformPositivity) {
    const ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, 1, 0, 0);
    const ValidationReport r = validate(spec);
    ASSERT_FALSE(r.valid());
    EXPECT_TRUE(mentions(r, "(A2)"));
}

TEST(Model, IndefiniteQIsRejected) {
    const ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, -1, 1, 0);
    const ValidationReport r = validate(spec);
    ASSERT_FALSE(r.valid());
    EXPECT_TRUE(mentions(r, "Q not positive semidefinite"));
}

TEST(Model, AsymmetricWeightIsRejected) {
    ConstantCoefficients c;
    c.A = Matrix::Zero(2, 2);
    c.B = Matrix::Identity(2, 2);
    c.C = {Matrix::Zero(2, 2)};
    c.D = {Matrix::Zero(2, 2)};
    c.Q = Matrix::Identity(2, 2);
    c.Q(0, 1) = 0.5;
    c.N = Matrix::Identity(2, 2);
    c.M = Matrix::Zero(2, 2);
    EXPECT_TRUE(mentions(validate(make_constant_spec(c)), "Q not symmetric"));
}

TEST(Model, ShapeMismatchIsReported) {
    ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, 1, 1, 0);
    spec.B = CoefficientProcess::constant(Matrix::Ones(2, 1));
    EXPECT_TRUE(mentions(validate(spec), "B has shape 2x1"));
}

TEST(Model, DeclaredBoundIsEnforcedAlongTheLattice) {
    ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, 1, 1, 0);
    spec.A = CoefficientProcess::brownian(1, 1, [](double, double w) { return Matrix::Constant(1, 1, w); }, 2.0);
    const ValidationReport r = validate(spec);
    ASSERT_FALSE(r.valid());
    EXPECT_TRUE(mentions(r, "A exceeds declared bound"));
    EXPECT_LE(r.violations.size(), 2u);  // first offending sample only
}

TEST(Model, BrownianModeNeedsScalarNoise) {
    ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, 1, 1, 0);
    spec.dims.d = 2;
    spec.C.push_back(CoefficientProcess::constant(Matrix::Zero(1, 1)));
    spec.D.push_back(CoefficientProcess::constant(Matrix::Zero(1, 1)));
    EXPECT_TRUE(validate(spec).valid());
    spec.A = CoefficientProcess::brownian(1, 1, [](double, double w) { return Matrix::Constant(1, 1, std::tanh(w)); });
    EXPECT_TRUE(mentions(validate(spec), "require d = 1"));
}

TEST(Model, ModeIsTheLargestCoefficientMode) {
    ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, 1, 1, 0);
    spec.Q = CoefficientProcess::time_varying(1, 1, [](double t) { return Matrix::Constant(1, 1, 1 + t); });
    EXPECT_EQ(spec.mode(), CoefficientMode::TimeVarying);
    spec.A = CoefficientProcess::brownian(1, 1, [](double, double w) { return Matrix::Constant(1, 1, w); });
    EXPECT_EQ(spec.mode(), CoefficientMode::BrownianFunctional);
    EXPECT_FALSE(spec.is_deterministic());
}

TEST(Model, EvaluationOutsideHorizonThrows) {
    const ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, 1, 1, 0, 2.0);
    EXPECT_NO_THROW(evaluate_coefficients(spec, 2.0, 0.0));
    EXPECT_THROW(evaluate_coefficients(spec, -1e-9, 0.0), DomainError);
    EXPECT_THROW(evaluate_coefficients(spec, 2.0 + 1e-9, 0.0), DomainError);
    EXPECT_THROW(evaluate_coefficients(spec, 1.0, NAN), DomainError);
}

TEST(Model, SnapshotHoldsCoefficientValues) {
    ProblemSpec spec = make_scalar_spec(0.5, 2.0, 0.3, 0.4, 1.5, 3.0, 0.7);
    spec.A = CoefficientProcess::brownian(1, 1, [](double t, double w) { return Matrix::Constant(1, 1, t + w); });
    const CoefficientSnapshot s = evaluate_coefficients(spec, 0.25, -1.0);
    EXPECT_DOUBLE_EQ(s.A(0, 0), -0.75);
    EXPECT_DOUBLE_EQ(s.B(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(s.C[0](0, 0), 0.3);
    EXPECT_DOUBLE_EQ(s.D[0](0, 0), 0.4);
    EXPECT_DOUBLE_EQ(s.Q(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(s.N(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(terminal_weight(spec, 0.0)(0, 0), 0.7);
}

TEST(Model, ExpressionCoefficientsRespectMode) {
    EXPECT_THROW(CoefficientProcess::from_expressions(CoefficientMode::Constant, 1, 1, {Expression::parse("t")}),
                 ConfigError);
    EXPECT_THROW(CoefficientProcess::from_expressions(CoefficientMode::TimeVarying, 1, 1, {Expression::parse("w")}),
                 ConfigError);
    const auto p =
        CoefficientProcess::from_expressions(CoefficientMode::BrownianFunctional, 1, 2,
                                             {Expression::parse("w"), Expression::parse("2*t")});
    const Matrix v = p(0.5, 3.0);
    EXPECT_DOUBLE_EQ(v(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(v(0, 1), 1.0);
}
