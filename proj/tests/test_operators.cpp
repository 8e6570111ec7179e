#include <mpjc/operators.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace mpjc;

namespace {

std::vector<double> sorted_eigenvalues(const Mat& h) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST(CavityOps, LadderMatrixElements) {
    auto c = build_cavity_ops(5);
    EXPECT_EQ(c.a(0, 1), cplx(1.0));
    EXPECT_EQ(c.a(2, 3), cplx(std::sqrt(3.0)));
    EXPECT_EQ(c.a.col(0).norm(), 0.0);
    EXPECT_EQ((c.a_dag - c.a.adjoint()).norm(), 0.0);
    Mat n = c.a_dag * c.a;
    for (int k = 0; k <= 5; ++k) EXPECT_NEAR(n(k, k).real(), k, 1e-15);
    EXPECT_NEAR((n - Mat(n.diagonal().asDiagonal())).norm(), 0.0, 1e-15);
}

TEST(CavityOps, RejectsBadTruncation) {
    EXPECT_THROW(build_cavity_ops(0), InvalidTruncation);
    EXPECT_THROW(build_operators(-3), InvalidTruncation);
}

TEST(Operators, TruncatedCommutator) {
    for (int nm : {1, 4, 14}) {
        auto o = build_operators(nm);
        auto c = build_cavity_ops(nm);
        Mat comm = c.a * c.a_dag - c.a_dag * c.a;
        Mat expected = Mat::Identity(nm + 1, nm + 1);
        expected(nm, nm) -= static_cast<double>(nm + 1);
        EXPECT_LT((comm - expected).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_EQ(o.dim, 2 * (nm + 1));
        Mat full = o.a * o.a_dag - o.a_dag * o.a;
        EXPECT_NEAR(full.trace().real(), 0.0, 1e-12);
    }
}

TEST(Operators, AtomOperatorsActOnSlowIndex) {
    const int nm = 3;
    auto o = build_operators(nm);
    Vec up = basis_state(2, Atom::excited, nm);
    Vec down = basis_state(2, Atom::ground, nm);
    EXPECT_NEAR((o.sm * up - down).norm(), 0.0, 1e-15);
    EXPECT_NEAR((o.sm * down).norm(), 0.0, 1e-15);
    EXPECT_EQ(basis_index(2, Atom::excited, nm), 1 * (nm + 1) + 2);
}

TEST(Hamiltonian, HermitianForRandomParams) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int k = 0; k < 10; ++k) {
        SystemParams p;
        p.g = u(rng);
        p.eps_d = u(rng);
        p.delta_omega_d = u(rng) - 1.5;
        p.n_max = 6;
        Mat h = build_jc_hamiltonian(p);
        EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Hamiltonian, UndrivenResonantSpectrum) {
    SystemParams p;
    p.g = 1.7;
    p.eps_d = 0;
    p.delta_omega_d = 0;
    p.n_max = 6;
    auto ev = sorted_eigenvalues(build_jc_hamiltonian(p));
    // Expected: 0 (ground), +-g sqrt(n) for n = 1..n_max, and the uncoupled |n_max, +> at 0.
    std::vector<double> expected{0.0, 0.0};
    for (int n = 1; n <= p.n_max; ++n) {
        expected.push_back(p.g * std::sqrt(n));
        expected.push_back(-p.g * std::sqrt(n));
    }
    std::sort(expected.begin(), expected.end());
    ASSERT_EQ(ev.size(), expected.size());
    for (std::size_t k = 0; k < ev.size(); ++k) EXPECT_NEAR(ev[k], expected[k], 1e-12);
}

TEST(Hamiltonian, DecoupledOscillators) {
    SystemParams p;
    p.g = 0;
    p.eps_d = 0;
    p.delta_omega_d = 0.37;
    p.n_max = 4;
    auto ev = sorted_eigenvalues(build_jc_hamiltonian(p));
    std::vector<double> expected;
    for (int s = 0; s <= 1; ++s)
        for (int n = 0; n <= p.n_max; ++n) expected.push_back(-p.delta_omega_d * (n + s));
    std::sort(expected.begin(), expected.end());
    for (std::size_t k = 0; k < ev.size(); ++k) EXPECT_NEAR(ev[k], expected[k], 1e-12);
}

TEST(Hamiltonian, ConservesExcitationWithoutDrive) {
    SystemParams p;
    p.g = 2.3;
    p.delta_omega_d = -0.4;
    p.eps_d = 0;
    p.n_max = 8;
    auto o = build_operators(p.n_max);
    Mat h = build_jc_hamiltonian(p, o);
    EXPECT_LT((h * o.excitation - o.excitation * h).norm(), 1e-12);
    p.eps_d = 0.1;
    h = build_jc_hamiltonian(p, o);
    EXPECT_GT((h * o.excitation - o.excitation * h).norm(), 1e-3);
}

TEST(DressedStates, GroundAndNormalization) {
    const int nm = 5;
    EXPECT_EQ((dressed_state(0, Branch::lower, nm) - basis_state(0, Atom::ground, nm)).norm(), 0.0);
    std::vector<Vec> all;
    for (int k = 0; k <= 2 * nm; ++k) all.push_back(dressed_state(k, nm));
    for (std::size_t i = 0; i < all.size(); ++i) {
        EXPECT_NEAR(all[i].norm(), 1.0, 1e-12);
        for (std::size_t j = 0; j < i; ++j) EXPECT_LT(std::abs(all[i].dot(all[j])), 1e-12);
    }
    EXPECT_EQ(all[1].dot(all[2]), cplx(0.0));
}

TEST(DressedStates, AreUndrivenEigenstates) {
    SystemParams p;
    p.g = 1.3;
    p.n_max = 4;
    Mat h = build_jc_hamiltonian(p);
    for (int n = 1; n <= p.n_max; ++n) {
        Vec lo = dressed_state(n, Branch::lower, p.n_max);
        Vec up = dressed_state(n, Branch::upper, p.n_max);
        EXPECT_NEAR((h * lo + p.g * std::sqrt(n) * lo).norm(), 0.0, 1e-12);
        EXPECT_NEAR((h * up - p.g * std::sqrt(n) * up).norm(), 0.0, 1e-12);
    }
}

TEST(DressedStates, IndexErrors) {
    EXPECT_THROW(dressed_state(4, Branch::upper, 3), IndexError);
    EXPECT_THROW(dressed_state(-1, Branch::upper, 3), IndexError);
}

TEST(PartialTrace, Examples) {
    const int nm = 3;
    Mat g = projector(basis_state(0, Atom::ground, nm));
    Mat rc = partial_trace_atom(g);
    ASSERT_EQ(rc.rows(), nm + 1);
    EXPECT_EQ(rc(0, 0), cplx(1.0));
    EXPECT_NEAR(rc.norm(), 1.0, 1e-15);

    Mat x1 = projector(dressed_state(1, Branch::lower, nm));
    Mat r1 = partial_trace_atom(x1);
    Mat expected = Mat::Zero(nm + 1, nm + 1);
    expected(0, 0) = expected(1, 1) = 0.5;
    EXPECT_LT((r1 - expected).norm(), 1e-12);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Mat m(8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) m(i, j) = cplx(nd(rng), nd(rng));
    Mat rho = m * m.adjoint();
    rho /= rho.trace();
    EXPECT_NEAR(std::abs(partial_trace_atom(rho).trace() - rho.trace()), 0.0, 1e-12);
    EXPECT_THROW(partial_trace_atom(Mat::Identity(5, 5)), DimensionMismatch);
}

TEST(SystemParams, Validation) {
    SystemParams p;
    p.gamma = 2.0;
    p.kappa = 1.0;
    p.impedance_matched = true;
    EXPECT_NO_THROW(p.validate());
    p.gamma = 2.5;
    EXPECT_THROW(p.validate(), ValidationError);
    p.impedance_matched = false;
    p.g = -1;
    p.eps_d = -2;
    try {
        p.validate();
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.violations.size(), 2u);
    }
}
