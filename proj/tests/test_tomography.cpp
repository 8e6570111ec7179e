#include <mpjc/estimators.hpp>
#include <mpjc/tomography.hpp>

#include <gtest/gtest.h>

using namespace mpjc;

namespace {

Vec fock(int n, int n_max) {
    Vec v = Vec::Zero(n_max + 1);
    v(n) = 1.0;
    return v;
}

}  // namespace

TEST(Tomography, VacuumIsGaussianWithQuarterVariance) {
    TomographyConfig c;
    c.theta = 0.7;
    c.seed = 3;
    auto r = free_decay_tomography(fock(0, 6), c);
    const double n = static_cast<double>(c.n_samples);
    EXPECT_LT(std::abs(r.mean), 3 * 0.5 / std::sqrt(n));
    EXPECT_LT(std::abs(r.variance - 0.25), 3 * 0.25 * std::sqrt(2.0 / (n - 1)));
    auto ks = ks_one_sample(r.samples, [](double q) { return 0.5 * std::erfc(-q * std::sqrt(2.0)); });
    EXPECT_GT(ks.p_value, 0.01);
}

TEST(Tomography, FockOneIsDoubleHumped) {
    TomographyConfig c;
    c.theta = 0.0;
    c.seed = 4;
    const Vec psi = fock(1, 6);
    auto r = free_decay_tomography(psi, c, 15);  // odd bin count: one bin centred at Q = 0
    const Mat rho = psi * psi.adjoint();
    EXPECT_LT(marginal_l1(r.histogram, rho, c.theta), 0.05);
    const std::size_t mid = 7;
    EXPECT_NEAR(r.histogram.centre(mid), 0.0, 1e-12);
    // binomial error on the central bin versus the exact (small) mass there
    const double w = r.histogram.width(mid);
    double exact = 0;
    for (int k = 0; k <= 40; ++k) {
        const double q = r.histogram.edges[mid] + w * k / 40.0;
        exact += (k == 0 || k == 40 ? 0.5 : 1.0) * quadrature_probability(rho, c.theta, q) * w / 40.0;
    }
    const double p_hat = r.histogram.density[mid] * w;
    EXPECT_LT(std::abs(p_hat - exact), 4 * std::sqrt(exact * (1 - exact) / c.n_samples) + 1e-3);
    const double peak = *std::max_element(r.histogram.density.begin(), r.histogram.density.end());
    EXPECT_LT(r.histogram.density[mid], 0.3 * peak);
    // Var(s^2) ~ (<x^4> - <x^2>^2)/n with <x^4> = 15/16 for one photon
    EXPECT_NEAR(r.variance, 0.75, 4 * std::sqrt((15.0 / 16 - 9.0 / 16) / c.n_samples));
}

TEST(Tomography, MixedInputMatchesMarginal) {
    const int nm = 8;
    Mat rho = Mat::Zero(nm + 1, nm + 1);
    rho(0, 0) = 0.5;
    rho(2, 2) = 0.3;
    rho(1, 1) = 0.2;
    rho(0, 2) = rho(2, 0) = 0.2;
    TomographyConfig c;
    c.theta = 0.4;
    c.seed = 9;
    auto r = free_decay_tomography(rho, c);
    EXPECT_LT(marginal_l1(r.histogram, rho, c.theta), 0.05);
}

TEST(Tomography, RejectsDriveAndIsDeterministic) {
    TomographyConfig c;
    c.eps_d = 0.1;
    EXPECT_THROW(free_decay_tomography(fock(0, 3), c), ValidationError);
    c.eps_d = 0;
    c.g = 1;
    EXPECT_THROW(free_decay_tomography(fock(0, 3), c), ValidationError);
    c.g = 0;
    c.n_samples = 50;
    auto a = free_decay_tomography(fock(1, 3), c);
    auto b = free_decay_tomography(fock(1, 3), c);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_GE(a.max_decay_time, std::log(1e4) / 2);
}

TEST(Histogram, CountsOutsideRange) {
    auto h = make_histogram({-2.0, 0.1, 0.2, 0.9, 1.0}, 0.0, 1.0, 2);
    EXPECT_EQ(h.outside, 2u);
    EXPECT_NEAR(h.density[0] * 0.5, 0.4, 1e-14);
    EXPECT_NEAR(h.density[1] * 0.5, 0.2, 1e-14);
    EXPECT_THROW(make_histogram({}, 1.0, 0.0, 3), ValidationError);
}
