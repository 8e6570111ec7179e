#include <mpjc/correlations.hpp>
#include <mpjc/ensemble.hpp>
#include <mpjc/four_level.hpp>
#include <mpjc/propagator.hpp>

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

using namespace mpjc;

namespace {

Vec random_state(int d, std::uint64_t seed) {
    RandomStream rs(seed);
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = cplx(rs.normal(), rs.normal());
    return v.normalized();
}

Mat heff_dense(const SystemParams& p) {
    auto o = build_operators(p.n_max);
    return build_jc_hamiltonian(p, o) - cplx(0, p.kappa) * o.num - cplx(0, 0.5 * p.gamma) * o.sps;
}

UnravelingConfig config(UnravelingScheme s, double duration, std::uint64_t seed = 1) {
    UnravelingConfig c;
    c.scheme = s;
    c.duration = duration;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(JcKernel, MatchesDenseOperators) {
    auto p = two_photon_params(7, 0.3, 6);
    p.delta_omega_d = -1.7;
    auto o = build_operators(p.n_max);
    JcKernel k(p);
    const Vec v = random_state(k.dim(), 3);
    Vec out;
    k.apply_a(v, out);
    EXPECT_LT((out - o.a * v).norm(), 1e-12);
    k.apply_sm(v, out);
    EXPECT_LT((out - o.sm * v).norm(), 1e-12);
    k.apply_heff(v, out, p.delta_omega_d);
    EXPECT_LT((out - heff_dense(p) * v).norm(), 1e-11);
    EXPECT_NEAR(k.photon_number(v), (v.adjoint() * o.num * v)(0).real(), 1e-12);
    EXPECT_NEAR(k.excitation(v), (v.adjoint() * o.sps * v)(0).real(), 1e-12);
    EXPECT_NEAR(std::abs(k.field(v) - (v.adjoint() * o.a * v)(0)), 0.0, 1e-12);
    EXPECT_NEAR(k.quadrature(v, 0.4), quadrature_expect(o, v * v.adjoint(), 0.4), 1e-12);
}

TEST(Direct, UndrivenGroundStateNeverJumps) {
    SystemParams p;
    p.eps_d = 0;
    p.n_max = 4;
    auto c = config(UnravelingScheme::direct, 2.0);
    c.snapshot_stride = 500;
    const Vec g = ground_state(p.n_max);
    auto rec = run_direct(p, c, g);
    EXPECT_TRUE(rec.jumps.empty());
    for (const auto& s : rec.snapshots) EXPECT_LT((s.psi - g).norm(), 1e-12);
}

TEST(Direct, LogNormEqualsNoJumpSurvival) {
    auto p = two_photon_params(200, 0.08, 6);
    auto c = config(UnravelingScheme::direct, 0.05, 4);
    const Vec psi0 = ground_state(p.n_max);
    auto rec = run_direct(p, c, psi0);
    ASSERT_TRUE(rec.jumps.empty()) << "seed chosen so the short run has no clicks";
    Mat u = (cplx(0, -1) * heff_dense(p) * rec.dt * static_cast<double>(rec.steps)).exp();
    const double survival = (u * psi0).squaredNorm();
    EXPECT_NEAR(std::exp(rec.log_norm_since_jump), survival, 1e-6);
    EXPECT_LT(((u * psi0).normalized() - rec.final_state).norm(), 1e-5);  // RK4 truncation over ~130 steps
}

TEST(Trajectory, DeterministicForSeedAndIndex) {
    auto p = two_photon_params(200, 0.08, 7);
    for (auto s : {UnravelingScheme::direct, UnravelingScheme::wave_particle, UnravelingScheme::heterodyne}) {
        auto c = config(s, 3.0, 99);
        auto a = run_trajectory(p, c, ground_state(p.n_max));
        auto b = run_trajectory(p, c, ground_state(p.n_max));
        EXPECT_EQ(a.jumps, b.jumps);
        EXPECT_EQ(a.current, b.current);
        EXPECT_EQ(a.final_state, b.final_state);
        c.index = 1;
        auto d = run_trajectory(p, c, ground_state(p.n_max));
        EXPECT_NE(a.final_state, d.final_state);
    }
}

TEST(Trajectory, RecordInvariants) {
    auto p = two_photon_params(200, 0.08, 7);
    auto c = config(UnravelingScheme::wave_particle, 20.0, 5);
    auto rec = run_wave_particle(p, c, ground_state(p.n_max));
    for (std::size_t k = 1; k < rec.jumps.size(); ++k) EXPECT_GT(rec.jumps[k].t, rec.jumps[k - 1].t);
    const double h = rec.dt * rec.cadence;
    for (std::size_t k = 0; k < rec.current.size(); ++k) EXPECT_NEAR(rec.current[k].t, k * h, 1e-9);
    EXPECT_NEAR(rec.final_state.norm(), 1.0, 1e-10);
    EXPECT_LT(rec.max_top_population, 1e-6);
    EXPECT_EQ(rec.cadence, static_cast<int>(std::ceil((1.0 / c.bandwidth) / (4.0 * rec.dt) - 1e-9)));
}

TEST(Trajectory, JumpProbabilityGuard) {
    SystemParams p;
    p.g = 1;
    p.kappa = 1;
    p.eps_d = 0;
    p.n_max = 25;
    auto c = config(UnravelingScheme::direct, 1.0);
    c.dt = 0.05;
    Vec psi = Vec::Zero(2 * (p.n_max + 1));
    psi(6) = 1.0;  // |6, ground>: 2 kappa n dt = 0.6
    EXPECT_THROW(run_direct(p, c, psi), DtTooLarge);
}

TEST(Trajectory, ConfigViolationsAreNamed) {
    auto p = two_photon_params(200, 0.08, 5);
    auto c = config(UnravelingScheme::wave_particle, 1.0);
    c.r = 1.5;
    c.dt = 1.0;
    c.bandwidth = 10.0;
    try {
        run_wave_particle(p, c, ground_state(p.n_max));
        FAIL();
    } catch (const ValidationError& e) {
        const std::string m = e.what();
        EXPECT_NE(m.find("r: must lie in [0, 1]"), std::string::npos) << m;
        EXPECT_NE(m.find("dt:"), std::string::npos) << m;
        EXPECT_NE(m.find("bandwidth_B"), std::string::npos) << m;
    }
    auto d = config(UnravelingScheme::direct, 1.0);
    EXPECT_THROW(run_wave_particle(p, d, ground_state(p.n_max)), ValidationError);
}

// The noise reconstructed from the recorded current replays the recorded state update.
TEST(WaveParticle, SameIncrementDrivesStateAndCurrent) {
    auto p = two_photon_params(200, 0.08, 7);
    auto c = config(UnravelingScheme::wave_particle, 0.5, 12);
    c.current_stride = 1;
    c.snapshot_stride = 1;
    Unraveling u(p, c);
    auto rec = u.run(ground_state(p.n_max));
    ASSERT_EQ(rec.snapshots.size(), rec.current.size());
    std::size_t replayed = 0;
    std::size_t ji = 0;
    for (std::size_t k = 0; k + 1 < rec.snapshots.size(); ++k) {
        const double t = rec.snapshots[k].t;
        const bool jumped = ji < rec.jumps.size() && std::abs(rec.jumps[ji].t - (t + rec.dt)) < 0.5 * rec.dt;
        if (jumped) {
            ++ji;
            continue;
        }
        Increments<2> zero;
        zero.v[0][0] = zero.v[1][1] = -rec.dt;
        cplx signal;
        u.advance(rec.snapshots[k].psi, t, zero, signal);
        const cplx dw = (rec.current[k + 1].i - u.filter_decay() * rec.current[k].i) / u.filter_gain() - signal * rec.dt;
        EXPECT_LT(std::abs(dw.imag()), 1e-12);
        Increments<2> inc = zero;
        inc.dw[0] = dw.real();
        const Vec next = u.advance(rec.snapshots[k].psi, t, inc, signal).normalized();
        ASSERT_LT((next - rec.snapshots[k + 1].psi).norm(), 1e-8) << "step " << k;
        ++replayed;
    }
    EXPECT_GT(replayed, 1000u);
}

TEST(Heterodyne, ComplexIncrementCovariances) {
    auto p = two_photon_params(200, 0.08, 4);
    auto c = config(UnravelingScheme::heterodyne, 1.0);
    Unraveling u(p, c);
    RandomStream rs(2024);
    const int n = 1000000;
    cplx sq = 0;
    double ab = 0, ab2 = 0;
    for (int k = 0; k < n; ++k) {
        const cplx z = u.noise(u.draw(rs));
        sq += z * z;
        ab += std::norm(z);
        ab2 += std::norm(z) * std::norm(z);
    }
    const double dt = u.dt();
    sq /= n;
    ab /= n;
    const double se_ab = std::sqrt((ab2 / n - ab * ab) / n);
    const double se_sq = dt / std::sqrt(2.0 * n);  // each component of z^2 has variance dt^2/2
    EXPECT_LT(std::abs(sq.real()), 3 * se_sq);
    EXPECT_LT(std::abs(sq.imag()), 3 * se_sq);
    EXPECT_LT(std::abs(ab - dt), 3 * se_ab);
}

// For an empty-atom driven cavity the conditional state stays coherent and the mean current
// divided by sqrt(2 kappa) is the conjugate field amplitude.
TEST(Heterodyne, DrivenCavityMeanCurrent) {
    SystemParams p;
    p.g = 0;
    p.kappa = 1;
    p.gamma = 2;
    p.eps_d = 0.8;
    p.delta_omega_d = 0.5;
    p.n_max = 10;
    const cplx alpha = expect_c(build_operators(p.n_max).a, CorrelationEngine(p).rho_ss());
    auto c = config(UnravelingScheme::heterodyne, 400.0, 8);
    auto rec = run_heterodyne(p, c, ground_state(p.n_max));
    EXPECT_TRUE(rec.jumps.empty());
    // batch means over blocks of 10/kappa after a 10/kappa transient
    std::vector<cplx> blocks;
    cplx acc = 0;
    int cnt = 0;
    for (const auto& s : rec.current) {
        if (s.t < 10) continue;
        acc += s.i;
        ++cnt;
        if (s.t >= 10.0 * (blocks.size() + 2)) {
            blocks.push_back(acc / static_cast<double>(cnt));
            acc = 0;
            cnt = 0;
        }
    }
    ASSERT_GE(blocks.size(), 30u);
    cplx mean = 0;
    for (auto b : blocks) mean += b;
    mean /= static_cast<double>(blocks.size());
    double var_re = 0, var_im = 0;
    for (auto b : blocks) {
        var_re += std::pow((b - mean).real(), 2);
        var_im += std::pow((b - mean).imag(), 2);
    }
    const double nb = static_cast<double>(blocks.size());
    const double se_re = std::sqrt(var_re / (nb - 1) / nb), se_im = std::sqrt(var_im / (nb - 1) / nb);
    const cplx est = mean / std::sqrt(2 * p.kappa);
    EXPECT_LT(std::abs(est.real() - std::conj(alpha).real()), 3 * se_re / std::sqrt(2.0) + 1e-3);
    EXPECT_LT(std::abs(est.imag() - std::conj(alpha).imag()), 3 * se_im / std::sqrt(2.0) + 1e-3);
}

// Small-ensemble consistency with the master equation (the acceptance binary runs the full-size check).
class EnsembleVsMasterEquation : public ::testing::TestWithParam<UnravelingScheme> {};

TEST_P(EnsembleVsMasterEquation, PhotonNumberTransient) {
    auto p = two_photon_params(200, 0.08, 7);
    auto c = config(GetParam(), 2.0, 31);
    c.observe_times = {0.25, 0.5, 1.0, 1.5, 2.0};
    auto res = run_ensemble(p, c, ground_state(p.n_max), 150);
    auto l = build_liouvillian(p);
    auto o = build_operators(p.n_max);
    auto me = propagate(l, projector(ground_state(p.n_max)), c.observe_times);
    for (std::size_t k = 0; k < c.observe_times.size(); ++k) {
        const double ref = expect(o.num, me.states[k]);
        EXPECT_LT(std::abs(res.stats.mean_n[k] - ref), 4 * res.stats.se_n[k] + 1e-3)
            << "t=" << c.observe_times[k] << " mean " << res.stats.mean_n[k] << " ref " << ref;
        const double refq = quadrature_expect(o, me.states[k], pi / 4);
        EXPECT_LT(std::abs(res.stats.mean_quadrature[k] - refq), 4 * res.stats.se_quadrature[k] + 1e-3);
    }
}

INSTANTIATE_TEST_SUITE_P(Schemes, EnsembleVsMasterEquation,
                         ::testing::Values(UnravelingScheme::direct, UnravelingScheme::wave_particle,
                                           UnravelingScheme::heterodyne),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Ensemble, IndependentOfWorkerCount) {
    auto p = two_photon_params(200, 0.08, 6);
    auto c = config(UnravelingScheme::wave_particle, 0.5, 3);
    c.observe_times = {0.5};
    setenv("JC_THREADS", "1", 1);
    auto a = run_ensemble(p, c, ground_state(p.n_max), 6);
    setenv("JC_THREADS", "3", 1);
    auto b = run_ensemble(p, c, ground_state(p.n_max), 6);
    unsetenv("JC_THREADS");
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(a.records[i].final_state, b.records[i].final_state);
    EXPECT_EQ(a.stats.mean_n, b.stats.mean_n);
    EXPECT_THROW(run_ensemble(p, c, ground_state(p.n_max), 0), ValidationError);
}

TEST(Direct, ClickChannelRatioMatchesSteadyState) {
    auto p = two_photon_params(200, 0.08, 7);
    auto c = config(UnravelingScheme::direct, 2500.0, 17);
    auto rec = run_direct(p, c, ground_state(p.n_max));
    CorrelationEngine eng(p);
    auto o = build_operators(p.n_max);
    const double predicted = 2 * p.kappa * eng.n_ss() / (p.gamma * expect(o.sps, eng.rho_ss()));
    const double nc = static_cast<double>(rec.count(Channel::cavity));
    const double ns = static_cast<double>(rec.count(Channel::spontaneous));
    ASSERT_GT(ns, 100);
    const double ratio = nc / ns;
    // Poisson counting error on the ratio; clicks are bunched, so allow 4 sigma.
    const double rel = std::sqrt(1.0 / nc + 1.0 / ns);
    EXPECT_LT(std::abs(ratio / predicted - 1.0), 4 * rel) << ratio << " vs " << predicted;
}

TEST(Direct, SevenPhotonCavityClicksOutnumberSpontaneous) {
    SystemParams p;
    p.g = 1000;
    p.kappa = 1;
    p.gamma = 2;
    p.eps_d = 0.14 * p.g;
    p.delta_omega_d = 0.38674 * p.g;
    p.n_max = 16;
    auto c = config(UnravelingScheme::direct, 5.0, 2);
    auto rec = run_direct(p, c, ground_state(p.n_max));
    EXPECT_GT(rec.count(Channel::cavity), rec.count(Channel::spontaneous));
    EXPECT_GT(rec.count(Channel::cavity), 0u);
}

TEST(WaveParticle, FullBranchingRemovesBackaction) {
    auto p = two_photon_params(200, 0.08, 7);
    auto c = config(UnravelingScheme::wave_particle, 1.0, 5);
    c.r = 1.0;
    c.snapshot_stride = 1;
    auto rec = run_wave_particle(p, c, ground_state(p.n_max));
    // With 1 - r = 0 the state evolves like the direct scheme between clicks: no dW dependence.
    auto d = config(UnravelingScheme::direct, 1.0, 5);
    d.snapshot_stride = 1;
    Unraveling ud(p, d);
    Unraveling uw(p, c);
    Increments<2> a, b;
    a.dw[0] = 0.3;
    b.dw[0] = -0.7;
    a.v[0][0] = b.v[0][0] = a.v[1][1] = b.v[1][1] = -uw.dt();
    cplx s;
    const Vec psi = rec.snapshots[100].psi;
    EXPECT_LT((uw.advance(psi, 0.0, a, s) - uw.advance(psi, 0.0, b, s)).norm(), 1e-14);
    EXPECT_EQ(s, cplx(0));
}
