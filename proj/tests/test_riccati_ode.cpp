#include "slq/riccati_ode.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>

using namespace slq;

namespace {

constexpr double kTanh1 = 0.7615941559557649;

ProblemSpec tanh_spec() { return make_scalar_spec(0, 1, 0, 0, 1, 1, 0); }

// K(t) for constant scalar coefficients with C = D = 0, from the separable
// form of dK/dtau = q + 2aK - beta K^2 with beta = b^2 / n.
double scalar_riccati(double a, double b, double q, double n, double m, double T, double t) {
    const double beta = b * b / n;
    const double disc = std::sqrt(a * a + beta * q);
    const double rp = (a + disc) / beta;
    const double rm = (a - disc) / beta;
    const double R = (m - rp) / (m - rm) * std::exp(-beta * (rp - rm) * (T - t));
    return (rp - R * rm) / (1.0 - R);
}

// K(0) = Y X^{-1} from the linear Hamiltonian system, C = D = 0.
Eigen::MatrixXd hamiltonian_K0(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                               const Eigen::MatrixXd& N, const Eigen::MatrixXd& M, double T) {
    const auto n = A.rows();
    Eigen::MatrixXd H(2 * n, 2 * n);
    H << A, -B * N.inverse() * B.transpose(), -Q, -A.transpose();
    const Eigen::MatrixXd E = (-T * H).exp();
    Eigen::MatrixXd terminal(2 * n, n);
    terminal << Eigen::MatrixXd::Identity(n, n), M;
    const Eigen::MatrixXd XY = E * terminal;
    return XY.bottomRows(n) * XY.topRows(n).inverse();
}

}  // namespace

TEST(RiccatiOde, TanhClosedForm) {
    const RiccatiPath path = solve_backward(tanh_spec(), 1000);
    EXPECT_NEAR(path.K.front()(0, 0), kTanh1, 1e-9);
    for (std::size_t k = 0; k < path.grid.size(); k += 100) {
        EXPECT_NEAR(path.K[k](0, 0), std::tanh(1.0 - path.grid[k]), 1e-9);
    }
}

TEST(RiccatiOde, FourthOrderContraction) {
    double prev = 0.0;
    for (int s : {10, 20, 40, 80}) {
        const double err = std::abs(solve_backward(tanh_spec(), s).K.front()(0, 0) - kTanh1);
        if (prev > 0.0) {
            EXPECT_GT(prev / err, 12.0) << s;
            EXPECT_LT(prev / err, 20.0) << s;
        }
        prev = err;
    }
}

TEST(RiccatiOde, ScalarWithDriftAndTerminalWeight) {
    const double a = 0.4, b = 0.8, q = 2.0, n = 0.5, m = 1.5, T = 2.0;
    const RiccatiPath path = solve_backward(make_scalar_spec(a, b, 0, 0, q, n, m, T), 2000);
    for (std::size_t k = 0; k < path.grid.size(); k += 250) {
        EXPECT_NEAR(path.K[k](0, 0), scalar_riccati(a, b, q, n, m, T, path.grid[k]), 1e-9);
    }
}

TEST(RiccatiOde, TwoByTwoAgainstHamiltonianExponential) {
    ConstantCoefficients c;
    c.A = Matrix(2, 2);
    c.A << 0, 1, 0, 0;
    c.B = Matrix::Identity(2, 2);
    c.C = {Matrix::Zero(2, 2)};
    c.D = {Matrix::Zero(2, 2)};
    c.Q = Matrix::Identity(2, 2);
    c.N = Matrix::Identity(2, 2);
    c.M = Matrix::Identity(2, 2);
    const RiccatiPath path = solve_backward(make_constant_spec(c), 1000);
    const Eigen::MatrixXd ref = hamiltonian_K0(c.A, c.B, c.Q, c.N, c.M, 1.0);
    EXPECT_LT((path.K.front() - ref).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(RiccatiOde, TerminalConditionAndStructure) {
    const ProblemSpec spec = make_scalar_spec(0.2, 1, 0.3, 0.2, 1, 1, 1.25);
    const RiccatiPath path = solve_backward(spec, 100);
    EXPECT_EQ(path.K.back()(0, 0), 1.25);
    EXPECT_EQ(path.grid.front(), 0.0);
    EXPECT_EQ(path.grid.back(), 1.0);
    EXPECT_EQ(path.steps(), 100u);
    ASSERT_EQ(path.G.size(), path.K.size());
    for (const auto& K : path.K) EXPECT_GE(K(0, 0), 0.0);
}

TEST(RiccatiOde, MultiplicativeNoiseMatchesFineReference) {
    const ProblemSpec spec = make_scalar_spec(0.2, 1, 0.3, 0.2, 1, 1, 1);
    const double ref = solve_backward(spec, 8000).K.front()(0, 0);
    const double e1 = std::abs(solve_backward(spec, 20).K.front()(0, 0) - ref);
    const double e2 = std::abs(solve_backward(spec, 40).K.front()(0, 0) - ref);
    EXPECT_GT(e1 / e2, 12.0);
    EXPECT_LT(e2, 1e-8);
}

TEST(RiccatiOde, TimeVaryingCoefficients) {
    // Q(t) = 2t with A = 0, B = N = 1: compare to a fine reference and check PSD.
    ProblemSpec spec = make_scalar_spec(0, 1, 0, 0, 1, 1, 0);
    spec.Q = CoefficientProcess::time_varying(1, 1, [](double t) { return Matrix::Constant(1, 1, 2 * t); });
    const double ref = solve_backward(spec, 8000).K.front()(0, 0);
    EXPECT_NEAR(solve_backward(spec, 1000).K.front()(0, 0), ref, 1e-10);
    EXPECT_GT(ref, 0.0);
}

TEST(RiccatiOde, GeneratorColumnIsTheDrift) {
    const RiccatiPath path = solve_backward(tanh_spec(), 400);
    for (std::size_t k = 0; k < path.K.size(); k += 40) {
        const double K = path.K[k](0, 0);
        EXPECT_NEAR(path.G[k](0, 0), 1.0 - K * K, 1e-12);
    }
}

TEST(RiccatiOde, Interpolation) {
    const RiccatiPath path = solve_backward(tanh_spec(), 10);
    EXPECT_EQ(interpolate(path, 0.3)(0, 0), path.K[3](0, 0));
    EXPECT_NEAR(interpolate(path, 0.35)(0, 0), 0.5 * (path.K[3](0, 0) + path.K[4](0, 0)), 1e-15);
    EXPECT_THROW(interpolate(path, -0.01), DomainError);
    EXPECT_THROW(interpolate(path, 1.01), DomainError);
}

TEST(RiccatiOde, RejectsBrownianSpecsAndTinyGrids) {
    ProblemSpec spec = tanh_spec();
    EXPECT_THROW(solve_backward(spec, 1), ConfigError);
    spec.A = CoefficientProcess::brownian(1, 1, [](double, double w) { return Matrix::Constant(1, 1, std::tanh(w)); });
    EXPECT_THROW(solve_backward(spec, 100), ConfigError);
}

TEST(RiccatiOde, PsdProjection) {
    Matrix x(2, 2);
    x << 1, 0, 0, -1e-10;
    const Matrix p = project_psd(x, 1e-8);
    Eigen::SelfAdjointEigenSolver<Matrix> es(p);
    EXPECT_GE(es.eigenvalues().minCoeff(), 0.0);
    x(1, 1) = -1e-3;
    EXPECT_THROW(project_psd(x, 1e-8), BlowUpError);
}

TEST(RiccatiOde, CsvLayout) {
    std::ostringstream os;
    write_csv(os, solve_backward(tanh_spec(), 4));
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,K00,G00");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}
