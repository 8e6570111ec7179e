#include <mpjc/estimators.hpp>
#include <mpjc/four_level.hpp>

#include <gtest/gtest.h>

using namespace mpjc;

namespace {

SystemParams empty_cavity(double eps, int n_max = 10) {
    SystemParams p;
    p.g = 0;
    p.kappa = 1;
    p.gamma = 2;
    p.eps_d = eps;
    p.delta_omega_d = 0;
    p.n_max = n_max;
    return p;
}

}  // namespace

TEST(Kolmogorov, KnownTailValues) {
    EXPECT_NEAR(kolmogorov_q(0.5), 0.9639452437, 1e-8);
    EXPECT_NEAR(kolmogorov_q(1.0), 0.2699996717, 1e-8);
    EXPECT_NEAR(kolmogorov_q(1.36), 0.0494858768, 1e-9);
    EXPECT_NEAR(kolmogorov_q(2.0), 0.0006709253, 1e-10);
    // the two series agree where they switch
    const double lo = kolmogorov_q(1.18 - 1e-12), hi = kolmogorov_q(1.18);
    EXPECT_NEAR(lo, hi, 1e-9);
    EXPECT_EQ(kolmogorov_q(0.0), 1.0);
}

TEST(Kolmogorov, OneAndTwoSample) {
    RandomStream rs(42);
    std::vector<double> a(3000), b(3000), c(3000);
    for (auto& x : a) x = rs.uniform();
    for (auto& x : b) x = rs.uniform();
    for (auto& x : c) x = 0.05 + rs.uniform();
    auto uni = [](double x) { return std::clamp(x, 0.0, 1.0); };
    EXPECT_GT(ks_one_sample(a, uni).p_value, 0.01);
    EXPECT_LT(ks_one_sample(a, [](double x) { return std::clamp(x * x, 0.0, 1.0); }).p_value, 1e-6);
    EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
    EXPECT_LT(ks_two_sample(a, c).p_value, 1e-3);
    const auto same = ks_two_sample(a, a);
    EXPECT_EQ(same.statistic, 0.0);
    EXPECT_EQ(same.p_value, 1.0);
    EXPECT_THROW(ks_two_sample({}, b), InsufficientData);
}

// Coherent light: photocount waiting times are exponential with rate 2 kappa |alpha|^2.
TEST(WaitingHistogram, PoissonControlIsExponential) {
    auto p = empty_cavity(0.7);
    UnravelingConfig c;
    c.duration = 3000;
    c.seed = 6;
    const Vec coh = [&] {
        Vec v = Vec::Zero(2 * (p.n_max + 1));
        const double al = -0.7;  // steady amplitude -i eps/kappa at zero detuning, up to phase
        for (int n = 0; n <= p.n_max; ++n) v(n) = std::pow(al, n) / std::sqrt(std::tgamma(n + 1.0));
        return Vec(v.normalized());
    }();
    auto rec = run_direct(p, c, coh);
    auto h = waiting_histogram({rec}, Channel::cavity);
    ASSERT_GT(h.count, 2000u);
    const double rate = 2 * p.kappa * 0.49;
    auto ks = ks_one_sample(h.intervals, [&](double x) { return 1 - std::exp(-rate * x); });
    EXPECT_GT(ks.p_value, 0.01) << ks.statistic;
    EXPECT_NEAR(h.mean, 1 / rate, 4 / rate / std::sqrt(static_cast<double>(h.count)));
    double integral = 0;
    for (double v : h.series.values) integral += v * 0.05;
    EXPECT_NEAR(integral, 1.0, 1e-12);
    EXPECT_EQ(h.series.kind, CorrelationKind::wait_forward);
}

TEST(WaitingHistogram, NeedsTwoClicks) {
    TrajectoryRecord r;
    r.jumps = {{0.5, Channel::cavity}, {0.7, Channel::spontaneous}};
    EXPECT_THROW(waiting_histogram({r}, Channel::cavity), InsufficientData);
    r.jumps.push_back({0.9, Channel::cavity});
    auto h = waiting_histogram({r}, Channel::cavity);
    EXPECT_EQ(h.count, 1u);
    EXPECT_NEAR(h.mean, 0.4, 1e-12);
}

TEST(OperationalH, RejectsUnsuitableRecords) {
    auto p = empty_cavity(0.0, 4);
    UnravelingConfig c;
    c.scheme = UnravelingScheme::wave_particle;
    c.duration = 1;
    auto rec = run_wave_particle(p, c, ground_state(p.n_max));
    EXPECT_THROW(sample_h_operational(rec, {0.0, 1.0}), EmptyEstimate);
    c.r = 1.0;
    auto full = run_wave_particle(p, c, ground_state(p.n_max));
    EXPECT_THROW(sample_h_operational(full, {0.0, 1.0}), ValidationError);
}

// Start times independent of the record: the average is the unconditioned mean current.
TEST(OperationalH, ShuffledStartTimesGiveMeanCurrent) {
    auto p = two_photon_params(200, 0.08, 7);
    UnravelingConfig c;
    c.scheme = UnravelingScheme::wave_particle;
    c.duration = 300;
    c.seed = 21;
    auto rec = run_wave_particle(p, c, ground_state(p.n_max));
    RandomStream rs(77);
    std::vector<double> starts(2000);
    for (auto& t : starts) t = 10 + rs.uniform() * 280;
    std::sort(starts.begin(), starts.end());
    std::vector<double> tau{-3, -1, 0, 1, 3};
    auto s = sample_current({rec}, {starts}, tau);
    EXPECT_EQ(series_count(s, "N_s"), 2000u);
    CorrelationEngine eng(p);
    const double mean_current = std::sqrt(8 * p.kappa * (1 - c.r)) * eng.a_theta_ss(pi / 4);
    // Start times are closer than the signal correlation time, so the spread exceeds the white-noise scale;
    // bound by the total current variance over the number of independent windows (~280 kappa^-1).
    double var = 0, mu = 0;
    for (const auto& x : rec.current) mu += x.i.real();
    mu /= static_cast<double>(rec.current.size());
    for (const auto& x : rec.current) var += std::pow(x.i.real() - mu, 2);
    var /= static_cast<double>(rec.current.size());
    const double se = std::sqrt(var * (2.0 / c.bandwidth + 1.0) / 280.0);
    for (double v : s.values) EXPECT_LT(std::abs(v - mean_current), 4 * se) << v << " vs " << mean_current;
}

// Independent quadrature of the filter integral: s = -ln(u)/B maps it onto a midpoint rule over u in (0, 1).
TEST(OperationalH, FilteredPredictionMatchesQuadrature) {
    auto p = two_photon_params(200, 0.08, 8);
    CorrelationEngine eng(p);
    const double b = 10.0, r = 0.5;
    std::vector<double> tau{-1.0, -0.2, 0.05, 0.3, 1.5};
    auto pred = filtered_h_prediction(eng, pi / 4, r, b, tau);
    const int m = 4000;
    for (std::size_t k = 0; k < tau.size(); ++k) {
        std::vector<double> pts;
        for (int i = 0; i < m; ++i) pts.push_back(tau[k] + std::log((i + 0.5) / m) / b);
        auto h = eng.h_theta(pi / 4, pts, HNormalization::per_photon);
        double acc = 0;
        for (double v : h.values) acc += v;
        EXPECT_NEAR(pred[k], std::sqrt(8 * (1 - r)) * acc / m, 2e-3) << tau[k];
    }
    // far from the click the series returns to the mean current
    auto far = filtered_h_prediction(eng, pi / 4, r, b, {-12.0, 12.0});
    for (double v : far) EXPECT_NEAR(v, 2.0 * eng.a_theta_ss(pi / 4), 1e-3);
}

TEST(TimeAveragedState, WindowsAndErrors) {
    auto p = two_photon_params(200, 0.08, 6);
    UnravelingConfig c;
    c.duration = 1.0;
    c.snapshot_stride = 100;
    auto rec = run_direct(p, c, ground_state(p.n_max));
    const auto& s = rec.snapshots[3];
    EXPECT_LT((time_averaged_state(rec, s.t, s.t) - s.psi * s.psi.adjoint()).norm(), 1e-14);
    Mat avg = time_averaged_state(rec, 0.0, 1.0);
    EXPECT_NEAR(avg.trace().real(), 1.0, 1e-12);
    EXPECT_TRUE(check_density(avg).ok());
    EXPECT_THROW(time_averaged_state(rec, 0.5, 0.4), EmptyEstimate);
    EXPECT_THROW(time_averaged_state(rec, 5.0, 6.0), EmptyEstimate);
}

TEST(TraceDistance, Basics) {
    auto g = projector(basis_state(0, Atom::ground, 3));
    auto e = projector(basis_state(1, Atom::ground, 3));
    EXPECT_NEAR(trace_distance(g, g), 0.0, 1e-14);
    EXPECT_NEAR(trace_distance(g, e), 1.0, 1e-14);
    EXPECT_NEAR(trace_distance(g, 0.5 * (g + e)), 0.5, 1e-14);
}
