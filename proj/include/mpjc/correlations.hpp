#pragma once

#include "propagator.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mpjc {

enum class CorrelationKind { g2, g2_AB, H_theta, wait_forward, wait_side };

inline const char* to_string(CorrelationKind k) {
    switch (k) {
        case CorrelationKind::g2: return "g2";
        case CorrelationKind::g2_AB: return "g2_AB";
        case CorrelationKind::H_theta: return "H_theta";
        case CorrelationKind::wait_forward: return "wait_forward";
        case CorrelationKind::wait_side: return "wait_side";
    }
    return "?";
}

inline CorrelationKind correlation_kind_from_string(const std::string& s) {
    for (auto k : {CorrelationKind::g2, CorrelationKind::g2_AB, CorrelationKind::H_theta,
                   CorrelationKind::wait_forward, CorrelationKind::wait_side})
        if (s == to_string(k)) return k;
    throw Error("unknown correlation kind '" + s + "'");
}

// H_theta normalizations: raw <a^dag a A_theta>, per_photon (tail -> <A_theta>_ss), unit (tail -> 1).
enum class HNormalization { raw, per_photon, unit };

inline const char* to_string(HNormalization n) {
    switch (n) {
        case HNormalization::raw: return "raw";
        case HNormalization::per_photon: return "per_photon";
        case HNormalization::unit: return "unit";
    }
    return "?";
}

inline HNormalization h_normalization_from_string(const std::string& s) {
    for (auto n : {HNormalization::raw, HNormalization::per_photon, HNormalization::unit})
        if (s == to_string(n)) return n;
    throw Error("unknown normalization '" + s + "' (expected raw|per_photon|unit)");
}

// Delay grid in units of 1/kappa plus values.
struct CorrelationSeries {
    std::vector<double> tau;
    std::vector<double> values;
    std::vector<double> values_imag;  // empty for real series
    CorrelationKind kind = CorrelationKind::g2;
    std::string normalization;
    std::optional<double> theta;
    SystemParams params;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::string>> meta;

    std::size_t size() const { return tau.size(); }

    // Linear interpolation on the grid.
    double at(double t) const {
        if (tau.empty()) throw EmptyEstimate("empty series");
        if (t <= tau.front()) return values.front();
        if (t >= tau.back()) return values.back();
        auto it = std::upper_bound(tau.begin(), tau.end(), t);
        const std::size_t k = static_cast<std::size_t>(it - tau.begin());
        const double w = (t - tau[k - 1]) / (tau[k] - tau[k - 1]);
        return (1 - w) * values[k - 1] + w * values[k];
    }
};

inline bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] > v[k - 1])) return false;
    return true;
}

// Uniform grid in kappa*tau. When g/kappa >= 200 the step is refined to at most pi/(20g).
inline std::vector<double> make_tau_grid(const SystemParams& p, double tau_min = -8.0, double tau_max = 8.0,
                                         int points = 801) {
    if (!(tau_max > tau_min) || points < 2) throw Error("invalid delay grid");
    int n = points;
    if (p.kappa > 0 && p.g / p.kappa >= 200.0) {
        const double max_step = pi / (20.0 * p.g) * p.kappa;
        const double needed = std::ceil((tau_max - tau_min) / max_step) + 1.0;
        if (needed > n) n = static_cast<int>(needed);
    }
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = tau_min + (tau_max - tau_min) * k / (n - 1);
    return g;
}

enum class WaitChannel { forward, side };

inline const char* to_string(WaitChannel c) { return c == WaitChannel::forward ? "forward" : "side"; }

struct WaitingStats {
    double mass = 0;  // integral of w over [0, inf)
    double mean = 0;  // mean interval in units of 1/kappa
};

// Shared unconditional quantities plus lazily built decompositions.
class CorrelationEngine {
public:
    explicit CorrelationEngine(const SystemParams& p,
                               PropagationMethod method = PropagationMethod::automatic)
        : p_(p), ops_(build_operators(p.n_max)), method_(method) {
        p.validate();
        l_ = build_liouvillian(p, ops_);
        rho_ss_ = steady_state(l_);
        n_ss_ = expect(ops_.num, rho_ss_);
        s_ss_ = expect(ops_.sps, rho_ss_);
        top_pop_ = mpjc::top_level_population(rho_ss_);
    }

    const SystemParams& params() const { return p_; }
    const Operators& ops() const { return ops_; }
    const Liouvillian& liouvillian() const { return l_; }
    const Mat& rho_ss() const { return rho_ss_; }
    double n_ss() const { return n_ss_; }
    double s_ss() const { return s_ss_; }
    double a_theta_ss(double theta) const { return quadrature_expect(ops_, rho_ss_, theta); }
    double top_level_population() const { return top_pop_; }
    bool truncation_flagged() const { return !(top_pop_ < truncation_tolerance); }
    PropagationMethod method() const { return method_; }

    CorrelationSeries g2(const std::vector<double>& tau) {
        require_photons();
        check_grid(tau);
        const Mat x = ops_.a * rho_ss_ * ops_.a_dag;
        auto v = evaluate(Gen::full, vec(x), trace_functional(ops_.num), abs_times(tau));
        auto s = make_series(CorrelationKind::g2, tau, "g2: normalized by <a^dag a>_ss^2");
        for (std::size_t k = 0; k < tau.size(); ++k) s.values[k] = v[k].real() / (n_ss_ * n_ss_);
        return s;
    }

    CorrelationSeries g2_cross(const std::vector<double>& tau) {
        require_photons();
        if (!(s_ss_ > 1e-12)) throw NormalizationError("steady atomic excitation vanishes");
        check_grid(tau);
        std::vector<double> pos, neg;
        split(tau, pos, neg);
        const Mat xf = ops_.a * rho_ss_ * ops_.a_dag;
        const Mat xs = ops_.sm * rho_ss_ * ops_.sp;
        auto vp = evaluate(Gen::full, vec(xf), trace_functional(ops_.sps), pos);
        auto vn = evaluate(Gen::full, vec(xs), trace_functional(ops_.num), neg);
        auto s = make_series(CorrelationKind::g2_AB, tau, "g2_AB: normalized by <a^dag a>_ss <s+s->_ss");
        merge(tau, vp, vn, s, [&](cplx z) { return z.real() / (n_ss_ * s_ss_); });
        return s;
    }

    CorrelationSeries h_theta(double theta, const std::vector<double>& tau,
                              HNormalization norm = HNormalization::per_photon) {
        check_grid(tau);
        std::vector<double> pos, neg;
        split(tau, pos, neg);
        const double c = std::cos(theta), sn = std::sin(theta);
        const cplx ph(c, -sn);
        const Mat xf = ops_.a * rho_ss_ * ops_.a_dag;
        const Mat xa = 0.5 * (ph * ops_.a * rho_ss_ + std::conj(ph) * rho_ss_ * ops_.a_dag);
        auto vp = evaluate(Gen::full, vec(xf), trace_functional(ops_.a), pos);
        auto vn = evaluate(Gen::full, vec(xa), trace_functional(ops_.num), neg);
        double scale = 1.0;
        if (norm != HNormalization::raw) {
            require_photons();
            scale = n_ss_;
        }
        if (norm == HNormalization::unit) {
            const double a = a_theta_ss(theta);
            if (std::abs(a) < 1e-12) throw NormalizationError("<A_theta>_ss vanishes; unit normalization undefined");
            scale *= a;
        }
        auto s = make_series(CorrelationKind::H_theta, tau, to_string(norm));
        s.theta = theta;
        // Re(e^{-i theta} z) written so that theta -> theta + pi flips the sign to rounding.
        std::vector<cplx> vpp(vp.size());
        for (std::size_t k = 0; k < vp.size(); ++k) vpp[k] = cplx(c * vp[k].real() + sn * vp[k].imag(), 0);
        merge(tau, vpp, vn, s, [&](cplx z) { return z.real() / scale; });
        return s;
    }

    CorrelationSeries waiting_time(WaitChannel ch, const std::vector<double>& tau) {
        check_grid(tau);
        for (double t : tau)
            if (t < 0) throw Error("waiting-time grid must be nonnegative");
        auto [x, r, rate] = waiting_setup(ch);
        auto v = evaluate(ch == WaitChannel::forward ? Gen::no_forward : Gen::no_side, x, r, times(tau));
        auto s = make_series(ch == WaitChannel::forward ? CorrelationKind::wait_forward : CorrelationKind::wait_side,
                             tau, "density per unit kappa*tau");
        for (std::size_t k = 0; k < tau.size(); ++k) s.values[k] = std::max(0.0, v[k].real()) * rate / p_.kappa;
        double mass = 0;
        for (std::size_t k = 1; k < tau.size(); ++k)
            mass += 0.5 * (s.values[k] + s.values[k - 1]) * (tau[k] - tau[k - 1]);
        s.meta.emplace_back("grid_mass", std::to_string(mass));
        if (std::abs(mass - 1.0) > 0.02)
            s.warnings.push_back("waiting-time grid too short: achieved mass " + std::to_string(mass));
        return s;
    }

    // Exact mass and mean from resolvents of the jump-excluded generator.
    WaitingStats waiting_stats(WaitChannel ch) {
        auto [x, r, rate] = waiting_setup(ch);
        const Mat& lb = ch == WaitChannel::forward ? lbar_forward() : lbar_side();
        Eigen::PartialPivLU<Mat> lu(lb);
        Vec y1 = lu.solve(x);   // L^-1 x
        Vec y2 = lu.solve(y1);  // L^-2 x
        WaitingStats st;
        st.mass = -(r * y1)(0).real() * rate;
        st.mean = (r * y2)(0).real() * rate * p_.kappa;
        return st;
    }

    const Mat& lbar_forward() {
        if (!lbar_f_) lbar_f_ = l_.matrix - 2.0 * p_.kappa * sandwich(ops_.a);
        return *lbar_f_;
    }
    const Mat& lbar_side() {
        if (!lbar_s_) lbar_s_ = l_.matrix - p_.gamma * sandwich(ops_.sm);
        return *lbar_s_;
    }

    // Raw regression values r . e^{G t} x at times t (units 1/kappa) for the full generator.
    std::vector<cplx> regression(const Vec& x, const Eigen::RowVectorXcd& r, const std::vector<double>& tau) {
        return evaluate(Gen::full, x, r, times(tau));
    }

    const SpectralDecomposition* spectral_full() { return decomposition(Gen::full); }

private:
    enum class Gen { full, no_forward, no_side };

    void require_photons() const {
        if (!(n_ss_ > 1e-12)) throw NormalizationError("steady photon number vanishes");
    }

    static void check_grid(const std::vector<double>& tau) {
        if (tau.empty()) throw Error("empty delay grid");
        if (!strictly_increasing(tau)) throw Error("delay grid must be strictly increasing");
    }

    std::vector<double> times(const std::vector<double>& tau) const {
        std::vector<double> t(tau.size());
        for (std::size_t k = 0; k < tau.size(); ++k) t[k] = tau[k] / p_.kappa;
        return t;
    }
    std::vector<double> abs_times(const std::vector<double>& tau) const {
        std::vector<double> t(tau.size());
        for (std::size_t k = 0; k < tau.size(); ++k) t[k] = std::abs(tau[k]) / p_.kappa;
        return t;
    }

    // Nonnegative delays and magnitudes of negative delays, both as raw times.
    void split(const std::vector<double>& tau, std::vector<double>& pos, std::vector<double>& neg) const {
        for (double t : tau) (t >= 0 ? pos : neg).push_back(std::abs(t) / p_.kappa);
    }

    template <class F>
    void merge(const std::vector<double>& tau, const std::vector<cplx>& vp, const std::vector<cplx>& vn,
               CorrelationSeries& s, F f) const {
        std::size_t ip = 0, in = 0;
        for (std::size_t k = 0; k < tau.size(); ++k) s.values[k] = f(tau[k] >= 0 ? vp[ip++] : vn[in++]);
    }

    CorrelationSeries make_series(CorrelationKind kind, const std::vector<double>& tau, std::string norm) const {
        CorrelationSeries s;
        s.tau = tau;
        s.values.assign(tau.size(), 0.0);
        s.kind = kind;
        s.normalization = std::move(norm);
        s.params = p_;
        if (truncation_flagged())
            s.warnings.push_back("truncation: top Fock population " + std::to_string(top_pop_));
        return s;
    }

    std::tuple<Vec, Eigen::RowVectorXcd, double> waiting_setup(WaitChannel ch) const {
        if (ch == WaitChannel::forward) {
            require_photons();
            return {vec(ops_.a * rho_ss_ * ops_.a_dag), trace_functional(ops_.num), 2.0 * p_.kappa / n_ss_};
        }
        if (!(s_ss_ > 1e-12)) throw NormalizationError("steady atomic excitation vanishes");
        return {vec(ops_.sm * rho_ss_ * ops_.sp), trace_functional(ops_.sps), p_.gamma / s_ss_};
    }

    const Mat& generator(Gen g) {
        switch (g) {
            case Gen::no_forward: return lbar_forward();
            case Gen::no_side: return lbar_side();
            default: return l_.matrix;
        }
    }

    const SpectralDecomposition* decomposition(Gen g) {
        auto& slot = spectral_[static_cast<int>(g)];
        if (!slot.tried) {
            slot.tried = true;
            if (method_ != PropagationMethod::stepping) slot.sd = spectral_decompose(generator(g));
            if (method_ == PropagationMethod::spectral && !slot.sd)
                throw SolverError("eigenbasis is ill-conditioned");
        }
        return slot.sd ? &*slot.sd : nullptr;
    }

    // Values of r . e^{G t} x at arbitrary nonnegative times.
    std::vector<cplx> evaluate(Gen g, const Vec& x, const Eigen::RowVectorXcd& r, const std::vector<double>& t) {
        std::vector<cplx> out(t.size());
        if (t.empty()) return out;
        if (const auto* sd = decomposition(g)) {
            Vec amp = sd->amplitudes(r, x);
            for (std::size_t k = 0; k < t.size(); ++k) {
                if (t[k] == 0) {
                    out[k] = (r * x)(0);
                    continue;
                }
                cplx acc = 0;
                for (Eigen::Index j = 0; j < amp.size(); ++j) acc += amp(j) * std::exp(sd->lambda(j) * t[k]);
                out[k] = acc;
            }
            return out;
        }
        // Stepping on the sorted set of distinct times.
        std::vector<double> u(t);
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());
        Stepper st(generator(g));
        auto vs = st.evolve(x, u);
        for (std::size_t k = 0; k < t.size(); ++k) {
            auto it = std::lower_bound(u.begin(), u.end(), t[k]);
            out[k] = (r * vs[static_cast<std::size_t>(it - u.begin())])(0);
        }
        return out;
    }

    struct Slot {
        bool tried = false;
        std::optional<SpectralDecomposition> sd;
    };

    SystemParams p_;
    Operators ops_;
    PropagationMethod method_;
    Liouvillian l_;
    Mat rho_ss_;
    double n_ss_ = 0, s_ss_ = 0, top_pop_ = 0;
    std::optional<Mat> lbar_f_, lbar_s_;
    Slot spectral_[3];
};

inline CorrelationSeries g2_forward(const SystemParams& p, const std::vector<double>& tau) {
    return CorrelationEngine(p).g2(tau);
}

inline CorrelationSeries g2_cross(const SystemParams& p, const std::vector<double>& tau) {
    return CorrelationEngine(p).g2_cross(tau);
}

inline CorrelationSeries h_theta(const SystemParams& p, double theta, const std::vector<double>& tau,
                                 HNormalization norm = HNormalization::per_photon) {
    return CorrelationEngine(p).h_theta(theta, tau, norm);
}

inline CorrelationSeries waiting_time(const SystemParams& p, WaitChannel ch, const std::vector<double>& tau) {
    return CorrelationEngine(p).waiting_time(ch, tau);
}

// Integral of |H(tau) - H(-tau)| over tau >= 0, by linear interpolation of the negative branch.
inline double asymmetry_integral(const CorrelationSeries& s) {
    double acc = 0;
    for (std::size_t k = 1; k < s.tau.size(); ++k) {
        const double t0 = s.tau[k - 1], t1 = s.tau[k];
        if (t0 < 0 || -t1 < s.tau.front()) continue;
        const double d0 = std::abs(s.values[k - 1] - s.at(-t0));
        const double d1 = std::abs(s.values[k] - s.at(-t1));
        acc += 0.5 * (d0 + d1) * (t1 - t0);
    }
    return acc;
}

// max over tau >= 0 of |f(tau) - f(-tau)|.
inline double max_asymmetry(const CorrelationSeries& s) {
    double m = 0;
    for (std::size_t k = 0; k < s.tau.size(); ++k)
        if (s.tau[k] > 0 && -s.tau[k] >= s.tau.front()) m = std::max(m, std::abs(s.values[k] - s.at(-s.tau[k])));
    return m;
}

}  // namespace mpjc
