#include "slq/riccati_core.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace slq;

namespace {

Matrix random_matrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
    std::normal_distribution<double> z(0.0, scale);
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = z(rng);
    return m;
}

Matrix random_psd(std::mt19937_64& rng, int n, double floor = 0.0) {
    const Matrix a = random_matrix(rng, n, n);
    return a * a.transpose() + floor * Matrix::Identity(n, n);
}

Matrix random_sym(std::mt19937_64& rng, int n) {
    const Matrix a = random_matrix(rng, n, n);
    return 0.5 * (a + a.transpose());
}

CoefficientSnapshot random_snapshot(std::mt19937_64& rng, int n, int m, int d) {
    CoefficientSnapshot s;
    s.A = random_matrix(rng, n, n);
    s.B = random_matrix(rng, n, m);
    for (int i = 0; i < d; ++i) {
        s.C.push_back(random_matrix(rng, n, n, 0.5));
        s.D.push_back(random_matrix(rng, n, m, 0.5));
    }
    s.Q = random_psd(rng, n);
    s.N = random_psd(rng, m, 1.0);
    return s;
}

// Hamiltonian minimand: generator drift of <K x, x> plus running cost, at control v.
double hamiltonian(const CoefficientSnapshot& s, const RiccatiPoint& p, const Vector& x, const Vector& v) {
    double f = 2.0 * x.dot(p.K * (s.A * x + s.B * v)) + x.dot(s.Q * x) + v.dot(s.N * v);
    for (std::size_t i = 0; i < s.C.size(); ++i) {
        const Vector y = s.C[i] * x + s.D[i] * v;
        f += 2.0 * x.dot(p.L[i] * y) + y.dot(p.K * y);
    }
    return f;
}

// Minimizes the quadratic v -> hamiltonian(v) by recovering its Hessian and
// gradient from point evaluations (polarization), then solving.
std::pair<double, Vector> brute_minimum(const CoefficientSnapshot& s, const RiccatiPoint& p, const Vector& x) {
    const int m = static_cast<int>(s.B.cols());
    auto f = [&](const Vector& v) { return hamiltonian(s, p, x, v); };
    const Vector zero = Vector::Zero(m);
    const double f0 = f(zero);
    Eigen::MatrixXd H(m, m);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        const Vector ei = Vector::Unit(m, i);
        b(i) = 0.5 * (f(ei) - f(-ei));
        H(i, i) = 0.5 * (f(ei) + f(-ei) - 2.0 * f0);
        for (int j = 0; j < i; ++j) {
            const Vector ej = Vector::Unit(m, j);
            H(i, j) = H(j, i) = 0.5 * (f(ei + ej) - f(ei) - f(ej) + f0);
        }
    }
    const Eigen::VectorXd v = -0.5 * H.ldlt().solve(b);
    return {f(v), v};
}

}  // namespace

TEST(RiccatiCore, GeneratorIsTheMinimizedHamiltonian) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 3, m = 1 + trial % 2, d = 1 + trial % 2;
        const CoefficientSnapshot s = random_snapshot(rng, n, m, d);
        RiccatiPoint p;
        p.K = random_psd(rng, n);
        for (int i = 0; i < d; ++i) p.L.push_back(random_sym(rng, n));
        const Matrix G = eval_G(s, p);
        const Matrix theta = feedback_gain(s, p);
        for (int k = 0; k < 5; ++k) {
            const Vector x = random_matrix(rng, n, 1);
            const auto [minimum, argmin] = brute_minimum(s, p, x);
            EXPECT_NEAR(x.dot(G * x), minimum, 1e-9 * (1.0 + std::abs(minimum)));
            const Vector u = -theta * x;
            EXPECT_LT((u - argmin).norm(), 1e-9 * (1.0 + argmin.norm()));
        }
    }
}

TEST(RiccatiCore, ScalarClosedForm) {
    const double a = 0.3, b = 1.2, c = 0.4, dd = 0.5, q = 0.7, nn = 1.1, K = 0.8, L = -0.2;
    CoefficientSnapshot s;
    s.A = Matrix::Constant(1, 1, a);
    s.B = Matrix::Constant(1, 1, b);
    s.C = {Matrix::Constant(1, 1, c)};
    s.D = {Matrix::Constant(1, 1, dd)};
    s.Q = Matrix::Constant(1, 1, q);
    s.N = Matrix::Constant(1, 1, nn);
    RiccatiPoint p{Matrix::Constant(1, 1, K), {Matrix::Constant(1, 1, L)}};
    const double Nk = nn + dd * dd * K;
    const double Mk = K * b + c * K * dd + L * dd;
    EXPECT_NEAR(eval_N(s, p.K)(0, 0), Nk, 1e-15);
    EXPECT_NEAR(eval_M(s, p.K, p.L)(0, 0), Mk, 1e-15);
    EXPECT_NEAR(eval_G(s, p)(0, 0), 2 * a * K + q + c * c * K + 2 * c * L - Mk * Mk / Nk, 1e-14);
    EXPECT_NEAR(feedback_gain(s, p)(0, 0), Mk / Nk, 1e-15);
}

TEST(RiccatiCore, GeneratorIsSymmetric) {
    std::mt19937_64 rng(3);
    const CoefficientSnapshot s = random_snapshot(rng, 4, 2, 2);
    RiccatiPoint p{random_psd(rng, 4), {random_sym(rng, 4), random_sym(rng, 4)}};
    const Matrix G = eval_G(s, p);
    EXPECT_EQ((G - G.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(RiccatiCore, ZeroValueGivesQ) {
    std::mt19937_64 rng(5);
    const CoefficientSnapshot s = random_snapshot(rng, 3, 2, 1);
    const RiccatiPoint p = RiccatiPoint::deterministic(Matrix::Zero(3, 3), 1);
    EXPECT_LT((eval_G(s, p) - s.Q).norm(), 1e-14);
    EXPECT_EQ(feedback_gain(s, p).norm(), 0.0);
}

TEST(RiccatiCore, SingularControlHessianThrows) {
    CoefficientSnapshot s;
    s.A = Matrix::Zero(1, 1);
    s.B = Matrix::Ones(1, 1);
    s.C = {Matrix::Zero(1, 1)};
    s.D = {Matrix::Zero(1, 1)};
    s.Q = Matrix::Ones(1, 1);
    s.N = Matrix::Zero(1, 1);
    const RiccatiPoint p = RiccatiPoint::deterministic(Matrix::Ones(1, 1), 1);
    EXPECT_THROW(eval_G(s, p), SingularityError);
    EXPECT_THROW(feedback_gain(s, p), SingularityError);
    // D' K D rescues a zero N.
    s.D = {Matrix::Ones(1, 1)};
    EXPECT_NO_THROW(feedback_gain(s, p));
}
