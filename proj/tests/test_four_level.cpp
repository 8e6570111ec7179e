#include <mpjc/correlations.hpp>
#include <mpjc/four_level.hpp>
#include <mpjc/mode_extraction.hpp>

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

using namespace mpjc;

namespace {

// Four-level regression value tr[O e^{L t} rho0] by dense exponentiation (independent of the closed form).
double four_level_regression(const FourLevelModel& m, const Mat& obs, const Mat& rho0, double t) {
    Mat e = (m.generator * t).exp();
    return (trace_functional(obs) * (e * vec(rho0)))(0).real();
}

std::vector<double> sample(double t0, double t1, int n) {
    std::vector<double> v;
    for (int k = 0; k < n; ++k) v.push_back(t0 + (t1 - t0) * k / (n - 1));
    return v;
}

}  // namespace

TEST(EffectiveParams, RatesAndShifts) {
    EXPECT_NEAR(cascade_rate_ratio(2.0, 1.0), 5.83, 0.01);
    EXPECT_NEAR(cascade_rate_ratio(0.0, 1.0), 33.97, 0.01);
    auto p = two_photon_params(200, 0.08);
    auto f = effective_params(p);
    EXPECT_NEAR(f.Omega / p.g, 2 * std::sqrt(2.0) * 0.0064, 1e-15);
    EXPECT_NEAR(f.Omega / p.g, 0.01810, 5e-6);
    EXPECT_NEAR(f.nu / p.g, 2.0 + 40.0 / 7.0 * 0.0064, 1e-12);
    EXPECT_NEAR(f.nu / p.g, 2.0366, 1e-4);
    EXPECT_NEAR(f.Gamma, p.gamma, 1e-15);
    EXPECT_NEAR(f.Gamma31, p.gamma / 4 * (1 + std::pow(std::sqrt(2.0) + 1, 2)), 1e-12);
    EXPECT_NEAR(f.Gamma32, p.gamma / 4 * (1 + std::pow(std::sqrt(2.0) - 1, 2)), 1e-12);
    EXPECT_NEAR(f.p3, f.Omega * f.Omega / (4 * f.Omega * f.Omega + p.gamma * p.gamma), 1e-15);
    EXPECT_TRUE(f.warnings.empty());
}

TEST(EffectiveParams, WarningsAndSaturation) {
    auto p = two_photon_params(200, 0.3);
    p.gamma = 0.5;
    p.impedance_matched = false;
    auto f = effective_params(p);
    EXPECT_EQ(f.warnings.size(), 2u);
    p.gamma = 1e-9;
    f = effective_params(p);
    EXPECT_NEAR(f.p3, 0.25, 1e-9);
    EXPECT_NEAR(f.n_ss(), 5.0 / 8.0, 1e-9);
    EXPECT_LE(f.p3, 0.5);
}

TEST(EffectiveDetuning, Values) {
    EXPECT_NEAR(effective_detuning_ratio(0.08), 0.71616, 1e-5);
    EXPECT_DOUBLE_EQ(effective_detuning_ratio(0.0), 1.0 / std::sqrt(2.0));
    EXPECT_NEAR(effective_detuning_ratio(0.5), 1.0607, 1e-4);
    auto p = two_photon_params(200, 0.5);
    EXPECT_NEAR(effective_detuning(p), 1.0607, 1e-4);
}

TEST(ConditionedStates, InversionAndValidity) {
    auto c = conditioned_states();
    EXPECT_NEAR(inversion(c.rho_cond_1), -0.4, 1e-15);
    EXPECT_NEAR(inversion(c.rho_cond_2), -2.0 / 3.0, 1e-15);
    for (const Mat* r : {&c.rho_cond_1, &c.rho_cond_2}) {
        EXPECT_NEAR(r->trace().real(), 1.0, 1e-14);
        Eigen::SelfAdjointEigenSolver<Mat> es(*r);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-14);
    }
    // Beat coefficients: 2 Re rho_12 at zero delay.
    EXPECT_NEAR(2 * c.rho_cond_1(1, 2).real(), 1.0 / 5.0, 1e-14);
    EXPECT_NEAR(2 * c.rho_cond_2(1, 2).real(), 1.0 / 3.0, 1e-14);
}

TEST(ConditionedStates, FollowFromProjectedJumpOperators) {
    // a and sigma_- restricted to xi_0..xi_3, built from the full-space dressed states.
    const int nm = 3;
    auto o = build_operators(nm);
    Mat a4(4, 4), s4(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            Vec bi = dressed_state(i, nm), bj = dressed_state(j, nm);
            a4(i, j) = bi.dot(o.a * bj);
            s4(i, j) = bi.dot(o.sm * bj);
        }
    Vec x3 = Vec::Zero(4);
    x3(3) = 1.0;
    Vec after_a = a4 * x3;
    Vec after_s = s4 * x3;
    // Forward emission from xi_3 lands on psi_super; side emission lands on psi_sym (up to sign).
    EXPECT_NEAR(std::abs(after_a.normalized().dot(psi_super())), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(after_s.normalized().dot(psi_sym())), 1.0, 1e-12);
    auto m = four_level_model(effective_params(two_photon_params(200, 0.05)));
    EXPECT_LT((a4.adjoint() * a4 - m.num).norm(), 1e-12);
    EXPECT_LT((s4.adjoint() * s4 - m.sps).norm(), 1e-12);
}

TEST(FourLevelModel, SteadyOccupations) {
    auto f = effective_params(two_photon_params(200, 0.05));
    auto m = four_level_model(f);
    Mat rho = steady_state(m.generator);
    EXPECT_NEAR(rho(3, 3).real(), f.p3, 1e-12);
    EXPECT_NEAR(expect(m.num, rho), 2.5 * f.p3, 1e-12);
    EXPECT_NEAR(expect(m.sps, rho), 1.5 * f.p3, 1e-12);
}

TEST(G2abAnalytic, ZeroDelayIdentityBothBranches) {
    for (double eps : {0.02, 0.05, 0.08, 0.12}) {
        auto f = effective_params(two_photon_params(200, eps));
        const double closed = 8.0 / 15.0 + 2.0 / 15.0 * std::pow(f.gamma / f.Omega, 2);
        EXPECT_NEAR(g2_ab_analytic(f, 0.0), closed, 1e-12 * closed);
        EXPECT_NEAR(g2_ab_analytic(f, -0.0 - 1e-300), closed, 1e-12 * closed);
        EXPECT_NEAR(g2_ab_zero_delay(f), closed, 1e-15 * closed);
    }
}

TEST(G2abAnalytic, Examples) {
    auto p = two_photon_params(200, 0.08);
    p.gamma = 0.01 * p.g;
    p.impedance_matched = false;
    auto f = effective_params(p);
    EXPECT_NEAR(g2_ab_analytic(f, 0.0), 0.574, 1e-3);
    EXPECT_NEAR(g2_ab_analytic(f, 20.0 / f.gamma), 1.0, 1e-6);
    EXPECT_NEAR(g2_ab_analytic(f, -20.0 / f.gamma), 1.0, 1e-6);
    f.Omega = 0;
    EXPECT_THROW(g2_ab_analytic(f, 0.1), SingularParameter);
}

TEST(G2abAnalytic, MatchesFourLevelRegression) {
    auto f = effective_params(two_photon_params(200, 0.05));
    auto m = four_level_model(f);
    auto c = conditioned_states();
    for (double t : {0.0, 0.01, 0.1, 0.37, 1.0, 2.5}) {
        // tr[s+s- e^{Lt} (a rho a^dag)] / (n s) with a rho a^dag = n rho_cond_1.
        const double fwd = four_level_regression(m, m.sps, c.rho_cond_1, t) / f.s_ss();
        EXPECT_NEAR(fwd, g2_ab_analytic(f, t), 1e-8) << t;
        const double bwd = four_level_regression(m, m.num, c.rho_cond_2, t) / f.n_ss();
        EXPECT_NEAR(bwd, g2_ab_analytic(f, -t), 1e-8) << t;
    }
}

TEST(G2abResonant, PeakAndZeros) {
    for (double ratio : {50.0, 100.0, 500.0}) {
        const double gamma = 1.0, g = ratio * gamma;
        const double peak = std::pow(2 * g / gamma, 2);
        for (int sgn : {+1, -1}) EXPECT_LT(std::abs(g2_ab_resonant_envelope_zero(g, gamma, sgn) - peak) / peak, 0.01);
        EXPECT_NEAR(g2_ab_resonant(g, gamma, 0.0).full, 4.0, 1e-12);
        for (int m : {-3, -1, 1, 2, 5}) {
            const double tm = m * pi / g;
            EXPECT_NEAR(g2_ab_resonant(g, gamma, tm).approx, 1.0, 1e-9);
        }
        EXPECT_NEAR(g2_ab_resonant(g, gamma, 60.0 / gamma).full, 1.0, 1e-9);
        EXPECT_NEAR(g2_ab_resonant(g, gamma, -60.0 / gamma).approx, 1.0, 1e-9);
    }
}

TEST(G2abFourLevelVsFullME, FrequenciesDecayAndIntermediateTimescale) {
    auto p = two_photon_params(200, 0.02, 8);
    auto f = effective_params(p);
    CorrelationEngine eng(p);
    const double dt = 0.004;
    auto tau = sample(0.0, 4.0, 1001);
    auto num = eng.g2_cross(tau);
    std::vector<double> ana(tau.size());
    for (std::size_t k = 0; k < tau.size(); ++k) ana[k] = g2_ab_analytic(f, tau[k]);

    auto mn = matrix_pencil(num.values, dt);
    auto ma = matrix_pencil(ana, dt);
    const double two_omega = 2 * f.Omega;  // in units of kappa (kappa = 1)
    const auto* sn = dominant_mode(mn, 0.2, 1.0);
    const auto* sa = dominant_mode(ma, 0.2, 1.0);
    const auto* bn = dominant_mode(mn, 300.0, 500.0);
    const auto* ba = dominant_mode(ma, 300.0, 500.0);
    ASSERT_TRUE(sn && sa && bn && ba);
    EXPECT_NEAR(sa->frequency(), two_omega, 1e-6 * two_omega);
    EXPECT_NEAR(ba->frequency(), f.nu, 1e-6 * f.nu);
    EXPECT_LT(std::abs(sn->frequency() - sa->frequency()) / sa->frequency(), 0.05);
    EXPECT_LT(std::abs(bn->frequency() - ba->frequency()) / ba->frequency(), 0.05);
    EXPECT_LT(std::abs(sn->decay() - sa->decay()) / sa->decay(), 0.10);

    // Intermediate timescale near g (sqrt2 - 1)/sqrt2: present numerically, absent analytically.
    const double mid = p.g * (std::sqrt(2.0) - 1) / std::sqrt(2.0);
    EXPECT_GT(band_weight(mn, 0.7 * mid, 1.3 * mid), 0.05);
    EXPECT_LT(band_weight(ma, 0.7 * mid, 1.3 * mid), 1e-6);
}

TEST(ModeExtraction, RecoversKnownModes) {
    const double dt = 0.01;
    std::vector<double> y;
    for (int k = 0; k < 600; ++k) {
        const double t = k * dt;
        y.push_back(1.0 + 0.5 * std::exp(-0.3 * t) * std::cos(7.0 * t) - 0.2 * std::exp(-1.1 * t));
    }
    auto modes = matrix_pencil(y, dt);
    const auto* osc = dominant_mode(modes, 5.0, 9.0);
    ASSERT_NE(osc, nullptr);
    EXPECT_NEAR(osc->frequency(), 7.0, 1e-6);
    EXPECT_NEAR(osc->decay(), 0.3, 1e-6);
    EXPECT_NEAR(std::abs(osc->amplitude), 0.25, 1e-6);
}
