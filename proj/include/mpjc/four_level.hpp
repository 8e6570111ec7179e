#pragma once

#include "liouvillian.hpp"

#include <array>
#include <string>
#include <vector>

namespace mpjc {

// |Delta omega_d| / g at the shifted two-photon resonance.
inline double effective_detuning_ratio(double eps_over_g) {
    return 1.0 / std::sqrt(2.0) + std::sqrt(2.0) * eps_over_g * eps_over_g;
}

inline double effective_detuning(const SystemParams& p) {
    if (!(p.g > 0)) throw SingularParameter("effective detuning needs g > 0");
    return effective_detuning_ratio(p.eps_d / p.g);
}

// Scenario helper: kappa = 1, gamma = 2 kappa, detuning from the perturbative rule.
inline SystemParams two_photon_params(double g_over_kappa, double eps_over_g, int n_max = 14) {
    SystemParams p;
    p.kappa = 1.0;
    p.gamma = 2.0;
    p.g = g_over_kappa;
    p.eps_d = eps_over_g * p.g;
    p.delta_omega_d = effective_detuning_ratio(eps_over_g) * p.g;
    p.n_max = n_max;
    p.impedance_matched = true;
    return p;
}

inline double gamma31(double gamma, double kappa) {
    const double s = std::sqrt(2.0) + 1.0;
    return gamma / 4.0 + s * s * kappa / 2.0;
}

inline double gamma32(double gamma, double kappa) {
    const double s = std::sqrt(2.0) - 1.0;
    return gamma / 4.0 + s * s * kappa / 2.0;
}

inline double cascade_rate_ratio(double gamma, double kappa) { return gamma31(gamma, kappa) / gamma32(gamma, kappa); }

struct FourLevelParams {
    double g = 0, kappa = 0, gamma = 0, eps_d = 0;
    double Omega = 0;
    double nu = 0;
    double Gamma31 = 0, Gamma32 = 0, Gamma = 0;
    std::array<double, 4> delta{};
    double p3 = 0;
    // Solution constants for the two conditioning emissions.
    double Sigma1 = -2.0 / 5.0, Sigma2 = -2.0 / 3.0;
    double C1 = 0, C2 = 0;
    double D1 = 1.0 / 5.0, D2 = 1.0 / 3.0;
    std::vector<std::string> warnings;

    double n_ss() const { return 2.5 * p3; }
    double s_ss() const { return 1.5 * p3; }
};

inline FourLevelParams effective_params(const SystemParams& p) {
    if (!(p.g > 0)) throw SingularParameter("four-level model needs g > 0");
    FourLevelParams f;
    f.g = p.g;
    f.kappa = p.kappa;
    f.gamma = p.gamma;
    f.eps_d = p.eps_d;
    const double e2g = p.eps_d * p.eps_d / p.g;
    const double r2 = std::sqrt(2.0);
    f.Omega = 2.0 * r2 * e2g;
    f.delta = {r2 * e2g, -(20.0 + 19.0 * r2) / 7.0 * e2g, (20.0 - 19.0 * r2) / 7.0 * e2g, -r2 * e2g};
    f.nu = 2.0 * p.g + f.delta[2] - f.delta[1];
    f.Gamma31 = gamma31(p.gamma, p.kappa);
    f.Gamma32 = gamma32(p.gamma, p.kappa);
    f.Gamma = p.gamma / 2.0 + p.kappa;
    const double den = 4.0 * f.Omega * f.Omega + p.gamma * p.gamma;
    f.p3 = den > 0 ? f.Omega * f.Omega / den : 0.25;
    const double q = den > 0 ? f.Omega * f.Omega / den : 0.25;
    f.C1 = -q * (1.0 + 2.0 * f.Sigma1);
    f.C2 = -q * (1.0 + 2.0 * f.Sigma2);
    if (p.gamma != 2.0 * p.kappa)
        f.warnings.push_back("four-level model assumes gamma = 2 kappa; rates are extrapolated");
    if (p.eps_d / p.g > 0.2) f.warnings.push_back("eps_d/g > 0.2: perturbative shifts are outside their validity range");
    return f;
}

// Four-level basis xi_0..xi_3.
inline Vec psi_super() {
    const double r2 = std::sqrt(2.0);
    Vec v = Vec::Zero(4);
    v(1) = std::sqrt(2.0 / 3.0) * (r2 + 1.0) / 2.0;
    v(2) = std::sqrt(2.0 / 3.0) * (r2 - 1.0) / 2.0;
    return v;
}

// sigma_- acting on xi_3 within the four-level manifold.
inline Vec psi_sym() {
    Vec v = Vec::Zero(4);
    v(1) = v(2) = 1.0 / std::sqrt(2.0);
    return v;
}

struct ConditionedStates {
    Mat rho_cond_1;  // after a forward (cavity) emission
    Mat rho_cond_2;  // after a side (spontaneous) emission
};

inline ConditionedStates conditioned_states() {
    Mat p0 = Mat::Zero(4, 4);
    p0(0, 0) = 1.0;
    Vec ps = psi_super(), pq = psi_sym();
    ConditionedStates c;
    c.rho_cond_1 = 0.4 * p0 + 0.6 * ps * ps.adjoint();
    c.rho_cond_2 = (2.0 / 3.0) * p0 + (1.0 / 3.0) * pq * pq.adjoint();
    return c;
}

// rho_33 - rho_00
inline double inversion(const Mat& rho4) { return (rho4(3, 3) - rho4(0, 0)).real(); }

// Closed-form cross-correlation of the four-level model, both delay branches.
inline double g2_ab_analytic(const FourLevelParams& f, double tau) {
    if (!(f.Omega > 0)) throw SingularParameter("Omega = 0: the closed form divides by Omega");
    const double gm = f.gamma, om = f.Omega;
    const double t = std::abs(tau);
    const double e1 = std::exp(-gm * t), e2 = std::exp(-2.0 * gm * t);
    const double beat = (gm * gm + 4.0 * om * om) / (om * om) / 15.0 * e1 * std::cos(f.nu * tau);
    const double base = 1.0 + e2 / 15.0 - 7.0 / 15.0 * gm / om * e1 * std::sin(2.0 * om * t);
    if (tau >= 0) return base + (3.0 * gm * gm / (om * om) - 4.0) / 15.0 * e1 * std::cos(2.0 * om * tau) - beat;
    return base + (gm * gm / (om * om) - 12.0) / 15.0 * e1 * std::cos(2.0 * om * tau) + beat;
}

inline double g2_ab_zero_delay(const FourLevelParams& f) {
    if (!(f.Omega > 0)) throw SingularParameter("Omega = 0: the closed form divides by Omega");
    const double r = f.gamma / f.Omega;
    return 8.0 / 15.0 + 2.0 / 15.0 * r * r;
}

// Resonant weak-drive cross-correlation: full bracket, its approximation, and the squared
// amplitude of the oscillating term (the envelope that peaks at about (2g/gamma)^2).
struct ResonantG2 {
    double full = 0;
    double approx = 0;
    double envelope = 0;
};

inline ResonantG2 g2_ab_resonant(double g, double gamma, double tau) {
    if (!(gamma > 0)) throw SingularParameter("resonant form needs gamma > 0");
    const double sgn = tau > 0 ? 1.0 : (tau < 0 ? -1.0 : 0.0);
    const double decay = std::exp(-gamma * std::abs(tau) / 2.0);
    const double k = 2.0 * g / gamma - (gamma / (2.0 * g)) * sgn;
    ResonantG2 r;
    const double b = 1.0 + decay * (std::cos(g * tau) - k * std::sin(g * tau));
    r.full = b * b;
    const double c = 1.0 - decay * (2.0 * g / gamma) * std::sin(g * tau);
    r.approx = c * c;
    r.envelope = decay * decay * (1.0 + k * k);
    return r;
}

// Envelope at tau = 0 from the side named by sgn (+1 or -1).
inline double g2_ab_resonant_envelope_zero(double g, double gamma, int sgn) {
    const double k = 2.0 * g / gamma - (gamma / (2.0 * g)) * sgn;
    return 1.0 + k * k;
}

// Effective four-level generator in the frame where xi_0 and xi_3 are degenerate.
struct FourLevelModel {
    Mat h;
    Mat generator;  // 16 x 16, row-major vectorization
    Mat num;        // a^dag a projected onto the manifold
    Mat sps;        // s+ s- projected onto the manifold
};

inline FourLevelModel four_level_model(const FourLevelParams& f) {
    const double r2 = std::sqrt(2.0);
    FourLevelModel m;
    m.h = Mat::Zero(4, 4);
    m.h(1, 1) = f.g * (1.0 - r2) / r2 + f.delta[1];
    m.h(2, 2) = f.g * (1.0 + r2) / r2 + f.delta[2];
    m.h(0, 3) = m.h(3, 0) = f.Omega;
    auto ket = [](int i, int j) {
        Mat x = Mat::Zero(4, 4);
        x(i, j) = 1.0;
        return x;
    };
    m.generator = -I * (spre(m.h) - spost(m.h)) + f.Gamma32 * dissipator(ket(2, 3)) +
                  f.Gamma31 * dissipator(ket(1, 3)) + f.Gamma * dissipator(ket(0, 1)) +
                  f.Gamma * dissipator(ket(0, 2));
    m.num = Mat::Zero(4, 4);
    m.num(1, 1) = m.num(2, 2) = 0.5;
    m.num(1, 2) = m.num(2, 1) = 0.5;
    m.num(3, 3) = 1.5;
    m.sps = Mat::Zero(4, 4);
    m.sps(1, 1) = m.sps(2, 2) = m.sps(3, 3) = 0.5;
    m.sps(1, 2) = m.sps(2, 1) = -0.5;
    return m;
}

}  // namespace mpjc
