#include "slq/riccati_core.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace slq {

RiccatiPoint RiccatiPoint::deterministic(const Matrix& K, int d) {
    RiccatiPoint p;
    p.K = K;
    p.L.assign(static_cast<std::size_t>(d), Matrix::Zero(K.rows(), K.cols()));
    return p;
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw DimensionError(what);
}

void check_state_shape(const CoefficientSnapshot& s, const Matrix& K) {
    const auto n = s.A.rows();
    require(K.rows() == n && K.cols() == n, "K must be n x n");
    require(s.C.size() == s.D.size(), "C and D lists differ in length");
}

double smallest_eigenvalue(const Matrix& sym) {
    if (sym.rows() == 1) return sym(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// Solves N X = rhs for SPD N; throws when N is numerically singular.
Matrix spd_solve(const Matrix& N, const Matrix& rhs) {
    const double lo = smallest_eigenvalue(N);
    if (!(lo > kSingularityThreshold)) {
        throw SingularityError("control Hessian N(K) singular: smallest eigenvalue " + std::to_string(lo), lo);
    }
    if (N.rows() == 1) return rhs / N(0, 0);
    Eigen::LLT<Matrix> llt(N);
    return llt.solve(rhs);
}

}  // namespace

Matrix eval_N(const CoefficientSnapshot& s, const Matrix& K) {
    check_state_shape(s, K);
    Matrix out = s.N;
    for (std::size_t i = 0; i < s.D.size(); ++i) {
        require(s.D[i].rows() == K.rows() && s.D[i].cols() == s.N.rows(), "D_i must be n x m");
        out.noalias() += s.D[i].transpose() * K * s.D[i];
    }
    return symmetrize(out);
}

Matrix eval_M(const CoefficientSnapshot& s, const Matrix& K, std::span<const Matrix> L) {
    check_state_shape(s, K);
    require(L.size() == s.D.size(), "L must hold d matrices");
    Matrix out = K * s.B;
    for (std::size_t i = 0; i < s.D.size(); ++i) {
        require(L[i].rows() == K.rows() && L[i].cols() == K.cols(), "L_i must be n x n");
        out.noalias() += s.C[i].transpose() * K * s.D[i];
        out.noalias() += L[i] * s.D[i];
    }
    return out;
}

Matrix eval_G(const CoefficientSnapshot& s, const RiccatiPoint& p) {
    const Matrix& K = p.K;
    const Matrix Nk = eval_N(s, K);
    const Matrix Mk = eval_M(s, K, p.L);
    Matrix out = s.A.transpose() * K + K * s.A + s.Q;
    for (std::size_t i = 0; i < s.C.size(); ++i) {
        out.noalias() += s.C[i].transpose() * K * s.C[i];
        out.noalias() += s.C[i].transpose() * p.L[i];
        out.noalias() += p.L[i] * s.C[i];
    }
    out.noalias() -= Mk * spd_solve(Nk, Mk.transpose());
    return symmetrize(out);
}

Matrix feedback_gain(const CoefficientSnapshot& s, const RiccatiPoint& p, Matrix& control_hessian) {
    control_hessian = eval_N(s, p.K);
    const Matrix Mk = eval_M(s, p.K, p.L);
    return spd_solve(control_hessian, Mk.transpose());
}

Matrix feedback_gain(const CoefficientSnapshot& s, const RiccatiPoint& p) {
    Matrix unused;
    return feedback_gain(s, p, unused);
}

}  // namespace slq
