#pragma once

#include "operators.hpp"

#include <Eigen/LU>

namespace mpjc {

// Row-major vectorization: vec(rho)[i*D + j] = rho(i, j), so vec(X rho Y) = (X (x) Y^T) vec(rho).
inline Vec vec(const Mat& rho) {
    const Eigen::Index d = rho.rows();
    Vec v(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) v(i * d + j) = rho(i, j);
    return v;
}

inline Mat unvec(const Vec& v) {
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (d * d != v.size()) throw DimensionMismatch("vector length is not a square");
    Mat rho(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) rho(i, j) = v(i * d + j);
    return rho;
}

// Row vector r with r . vec(rho) = tr(O rho).
inline Eigen::RowVectorXcd trace_functional(const Mat& op) {
    const Eigen::Index d = op.rows();
    Eigen::RowVectorXcd r(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) r(i * d + j) = op(j, i);
    return r;
}

// Superoperators for left and right multiplication and the jump map C . C^dag.
inline Mat spre(const Mat& x) {
    return Eigen::kroneckerProduct(x, Mat::Identity(x.rows(), x.rows())).eval();
}
inline Mat spost(const Mat& y) {
    return Eigen::kroneckerProduct(Mat::Identity(y.rows(), y.rows()), y.transpose()).eval();
}
inline Mat sandwich(const Mat& c) { return Eigen::kroneckerProduct(c, c.conjugate()).eval(); }

inline Mat dissipator(const Mat& c) {
    Mat cdc = c.adjoint() * c;
    return sandwich(c) - 0.5 * spre(cdc) - 0.5 * spost(cdc);
}

struct Liouvillian {
    SystemParams params;
    int dim = 0;  // D; the matrix is D^2 x D^2
    Mat matrix;
};

inline Liouvillian build_liouvillian(const SystemParams& p, const Operators& o) {
    Mat h = build_jc_hamiltonian(p, o);
    Liouvillian l;
    l.params = p;
    l.dim = o.dim;
    l.matrix = -I * (spre(h) - spost(h)) + dissipator(std::sqrt(2.0 * p.kappa) * o.a) +
               dissipator(std::sqrt(p.gamma) * o.sm);
    return l;
}

inline Liouvillian build_liouvillian(const SystemParams& p) {
    p.validate();
    return build_liouvillian(p, build_operators(p.n_max));
}

// Direct matrix route for the same generator, used to cross-check the superoperator.
inline Mat apply_lindblad(const SystemParams& p, const Operators& o, const Mat& rho) {
    Mat h = build_jc_hamiltonian(p, o);
    Mat out = -I * (h * rho - rho * h);
    out += p.kappa * (2.0 * o.a * rho * o.a_dag - o.num * rho - rho * o.num);
    out += 0.5 * p.gamma * (2.0 * o.sm * rho * o.sp - o.sps * rho - rho * o.sps);
    return out;
}

struct SteadyStateOptions {
    double rcond_floor = 1e-13;
    double residual_tol = 1e-9;
};

// Null vector of L by a bordered solve: the first row is replaced by the trace functional.
inline Mat steady_state(const Mat& lmat, SteadyStateOptions opt = {}) {
    const Eigen::Index n = lmat.rows();
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
    Mat a = lmat;
    a.row(0).setZero();
    for (Eigen::Index i = 0; i < d; ++i) a(0, i * d + i) = 1.0;
    Vec rhs = Vec::Zero(n);
    rhs(0) = 1.0;

    Eigen::PartialPivLU<Mat> lu(a);
    const auto piv = lu.matrixLU().diagonal().cwiseAbs();
    const double rc = std::min(lu.rcond(), piv.minCoeff() / piv.maxCoeff());
    if (!(rc > opt.rcond_floor))
        throw AmbiguityError("steady state is not unique (bordered system rcond=" +
                             std::to_string(rc) + ")");
    Vec x = lu.solve(rhs);
    if (!x.allFinite()) throw AmbiguityError("steady state is not unique (singular bordered system)");
    Mat rho = unvec(x);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();

    const double res = (lmat * vec(rho)).norm();
    if (!(res < opt.residual_tol))
        throw SolverError("steady-state residual " + std::to_string(res) + " exceeds tolerance");
    return rho;
}

inline Mat steady_state(const Liouvillian& l, SteadyStateOptions opt = {}) {
    return steady_state(l.matrix, opt);
}

// Population of the top Fock level; the truncation is trusted when it is below 1e-6.
inline double top_level_population(const Mat& rho) {
    Mat rc = partial_trace_atom(rho);
    return rc(rc.rows() - 1, rc.rows() - 1).real();
}

inline constexpr double truncation_tolerance = 1e-6;

inline bool truncation_ok(const Mat& rho) { return top_level_population(rho) < truncation_tolerance; }

// Density-matrix validity checks used by tests and the runner.
struct DensityCheck {
    double hermiticity = 0;
    double trace_error = 0;
    double min_eigenvalue = 0;
    bool ok(double herm_tol = 1e-10, double tr_tol = 1e-10, double eig_floor = -1e-8) const {
        return hermiticity < herm_tol && trace_error < tr_tol && min_eigenvalue >= eig_floor;
    }
};

inline DensityCheck check_density(const Mat& rho) {
    DensityCheck c;
    c.hermiticity = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    c.trace_error = std::abs(rho.trace() - cplx(1.0));
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho + rho.adjoint()));
    c.min_eigenvalue = es.eigenvalues().minCoeff();
    return c;
}

}  // namespace mpjc
