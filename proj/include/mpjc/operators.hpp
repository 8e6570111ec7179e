#pragma once

#include "types.hpp"

#include <unsupported/Eigen/KroneckerProduct>

namespace mpjc {

struct CavityOps {
    Mat a;
    Mat a_dag;
};

inline CavityOps build_cavity_ops(int n_max) {
    if (n_max < 1) throw InvalidTruncation("n_max must be >= 1");
    const int d = n_max + 1;
    Mat a = Mat::Zero(d, d);
    for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return {a, a.adjoint()};
}

// Full-space operators on atom (x) cavity.
struct Operators {
    int n_max = 0;
    int dim = 0;
    Mat a, a_dag, sp, sm, num, sps, excitation, id;
};

inline Operators build_operators(int n_max) {
    auto cav = build_cavity_ops(n_max);
    const int d = n_max + 1;
    Mat id_c = Mat::Identity(d, d);
    Mat id_a = Mat::Identity(2, 2);
    Mat sm_a = Mat::Zero(2, 2);
    sm_a(0, 1) = 1.0;

    Operators o;
    o.n_max = n_max;
    o.dim = 2 * d;
    o.a = Eigen::kroneckerProduct(id_a, cav.a);
    o.a_dag = o.a.adjoint();
    o.sm = Eigen::kroneckerProduct(sm_a, id_c);
    o.sp = o.sm.adjoint();
    o.num = o.a_dag * o.a;
    o.sps = o.sp * o.sm;
    o.excitation = o.num + o.sps;
    o.id = Mat::Identity(o.dim, o.dim);
    return o;
}

// H = -dw (s+s- + a^dag a) + g (a s+ + a^dag s-) + eps (a + a^dag)
inline Mat build_jc_hamiltonian(const SystemParams& p, const Operators& o) {
    return -p.delta_omega_d * o.excitation + p.g * (o.a * o.sp + o.a_dag * o.sm) +
           p.eps_d * (o.a + o.a_dag);
}

inline Mat build_jc_hamiltonian(const SystemParams& p) {
    p.validate();
    return build_jc_hamiltonian(p, build_operators(p.n_max));
}

inline Vec basis_state(int n, Atom s, int n_max) {
    Vec v = Vec::Zero(2 * (n_max + 1));
    v(basis_index(n, s, n_max)) = 1.0;
    return v;
}

inline Vec ground_state(int n_max) { return basis_state(0, Atom::ground, n_max); }

enum class Branch { lower, upper };

// |xi_{2n-1}> = (|n,-> - |n-1,+>)/sqrt2, |xi_{2n}> = (|n,-> + |n-1,+>)/sqrt2; n = 0 gives |0,->.
inline Vec dressed_state(int n, Branch branch, int n_max) {
    if (n_max < 1) throw InvalidTruncation("n_max must be >= 1");
    if (n < 0 || n > n_max) throw IndexError("dressed-state index out of range");
    if (n == 0) return ground_state(n_max);
    const double sign = branch == Branch::lower ? -1.0 : 1.0;
    Vec v = basis_state(n, Atom::ground, n_max) + sign * basis_state(n - 1, Atom::excited, n_max);
    return v / std::sqrt(2.0);
}

// Dressed state by its flat label k: 0 -> xi_0, 2n-1 -> lower, 2n -> upper.
inline Vec dressed_state(int k, int n_max) {
    if (k < 0) throw IndexError("dressed-state index out of range");
    if (k == 0) return ground_state(n_max);
    return dressed_state((k + 1) / 2, k % 2 == 1 ? Branch::lower : Branch::upper, n_max);
}

inline Mat partial_trace_atom(const Mat& rho) {
    if (rho.rows() != rho.cols()) throw DimensionMismatch("density matrix is not square");
    const int n_max = n_max_from_dim(rho.rows());
    const int d = n_max + 1;
    return rho.topLeftCorner(d, d) + rho.bottomRightCorner(d, d);
}

inline Mat projector(const Vec& v) { return v * v.adjoint(); }

inline double expect(const Mat& op, const Mat& rho) { return (op * rho).trace().real(); }

inline cplx expect_c(const Mat& op, const Mat& rho) { return (op * rho).trace(); }

// <A_theta> = Re(e^{-i theta} <a>)
inline double quadrature_expect(const Operators& o, const Mat& rho, double theta) {
    return (std::exp(-I * theta) * expect_c(o.a, rho)).real();
}

}  // namespace mpjc
