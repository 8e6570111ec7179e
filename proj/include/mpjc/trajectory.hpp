#pragma once

#include "operators.hpp"
#include "schedule.hpp"
#include "stochastic.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mpjc {

enum class UnravelingScheme { direct, wave_particle, heterodyne, free_decay };

inline const char* to_string(UnravelingScheme s) {
    switch (s) {
        case UnravelingScheme::direct: return "direct";
        case UnravelingScheme::wave_particle: return "wave_particle";
        case UnravelingScheme::heterodyne: return "heterodyne";
        case UnravelingScheme::free_decay: return "free_decay";
    }
    return "?";
}

inline UnravelingScheme parse_scheme(const std::string& s) {
    if (s == "direct") return UnravelingScheme::direct;
    if (s == "wave_particle" || s == "wave-particle") return UnravelingScheme::wave_particle;
    if (s == "heterodyne") return UnravelingScheme::heterodyne;
    if (s == "free_decay" || s == "free-decay") return UnravelingScheme::free_decay;
    throw ValidationError({"scheme: unknown value '" + s + "' (direct|wave_particle|heterodyne|free_decay)"});
}

enum class Channel { cavity, spontaneous };

inline const char* to_string(Channel c) { return c == Channel::cavity ? "cavity" : "spontaneous"; }

inline Channel parse_channel(const std::string& s) {
    if (s == "cavity" || s == "forward") return Channel::cavity;
    if (s == "spontaneous" || s == "side") return Channel::spontaneous;
    throw ValidationError({"channel: unknown value '" + s + "'"});
}

// Matrix-free action of the JC operators; basis index s*(n_max+1) + n.
class JcKernel {
public:
    explicit JcKernel(const SystemParams& p)
        : nm_(p.n_max), cd_(p.n_max + 1), g_(p.g), kappa_(p.kappa), gamma_(p.gamma), eps_(p.eps_d), sq_(p.n_max + 2) {
        for (int n = 0; n <= nm_ + 1; ++n) sq_[n] = std::sqrt(static_cast<double>(n));
    }

    int n_max() const { return nm_; }
    int dim() const { return 2 * cd_; }

    void apply_a(const Vec& in, Vec& out) const {
        out.resize(in.size());
        for (int s = 0; s < 2; ++s) {
            const int o = s * cd_;
            for (int n = 0; n < nm_; ++n) out(o + n) = sq_[n + 1] * in(o + n + 1);
            out(o + nm_) = 0.0;
        }
    }

    void apply_sm(const Vec& in, Vec& out) const {
        out.resize(in.size());
        for (int n = 0; n < cd_; ++n) {
            out(n) = in(cd_ + n);
            out(cd_ + n) = 0.0;
        }
    }

    // H' = H - i kappa a^dag a - i (gamma/2) sigma_+ sigma_-.
    void apply_heff(const Vec& in, Vec& out, double delta) const {
        out.resize(in.size());
        for (int s = 0; s < 2; ++s)
            for (int n = 0; n < cd_; ++n) {
                const int idx = s * cd_ + n;
                cplx v = cplx(-delta * (n + s), -(kappa_ * n + 0.5 * gamma_ * s)) * in(idx);
                if (s == 1) {
                    if (n < nm_) v += g_ * sq_[n + 1] * in(n + 1);
                } else if (n > 0) {
                    v += g_ * sq_[n] * in(cd_ + n - 1);
                }
                if (n < nm_) v += eps_ * sq_[n + 1] * in(idx + 1);
                if (n > 0) v += eps_ * sq_[n] * in(idx - 1);
                out(idx) = v;
            }
    }

    // Expectation values with the state's own normalization.
    double photon_number(const Vec& psi) const {
        double acc = 0;
        for (int s = 0; s < 2; ++s)
            for (int n = 1; n < cd_; ++n) acc += n * std::norm(psi(s * cd_ + n));
        return acc / psi.squaredNorm();
    }

    double excitation(const Vec& psi) const { return psi.tail(cd_).squaredNorm() / psi.squaredNorm(); }

    cplx field(const Vec& psi) const {
        cplx acc = 0;
        for (int s = 0; s < 2; ++s)
            for (int n = 0; n < nm_; ++n) acc += std::conj(psi(s * cd_ + n)) * sq_[n + 1] * psi(s * cd_ + n + 1);
        return acc / psi.squaredNorm();
    }

    // <A_theta> = Re(e^{-i theta} <a>).
    double quadrature(const Vec& psi, double theta) const { return (std::exp(cplx(0, -theta)) * field(psi)).real(); }

    double top_population(const Vec& psi) const {
        return (std::norm(psi(nm_)) + std::norm(psi(cd_ + nm_))) / psi.squaredNorm();
    }

private:
    int nm_, cd_;
    double g_, kappa_, gamma_, eps_;
    std::vector<double> sq_;
};

struct UnravelingConfig {
    UnravelingScheme scheme = UnravelingScheme::direct;
    double r = 0.5;                  // APD branching fraction
    Schedule theta{pi / 4};          // LO phase
    std::optional<Schedule> detuning;  // overrides params.delta_omega_d when set
    double bandwidth = 10.0;         // B, same units as kappa
    double dt = 0.0;                 // 0 selects the largest admissible step
    double duration = 10.0;
    std::uint64_t seed = 1;
    std::uint64_t index = 0;         // trajectory index within an ensemble
    SdeScheme integrator = SdeScheme::weak2;
    int snapshot_stride = 0;         // 0 disables snapshots
    int current_stride = 0;          // 0 selects ceil((1/B)/(4 dt))
    std::vector<double> observe_times;
    double max_jump_probability = 0.1;
    bool record_jump_states = false;  // keep the normalized state right after every jump

    bool filtered() const {
        return scheme == UnravelingScheme::wave_particle || scheme == UnravelingScheme::heterodyne;
    }

    static double beat_limit(const SystemParams& p) {
        return p.g > 0 ? pi / (40.0 * p.g) : std::numeric_limits<double>::infinity();
    }

    double nominal_dt(const SystemParams& p) const {
        if (dt > 0) return dt;
        double h = beat_limit(p);
        const double rate = std::max({p.kappa, p.gamma, p.eps_d, 1e-300});
        h = std::min(h, 0.01 / rate);
        if (filtered()) h = std::min(h, 0.1 / bandwidth);
        return h;
    }

    long n_steps(const SystemParams& p) const {
        return std::max(1L, static_cast<long>(std::ceil(duration / nominal_dt(p) - 1e-9)));
    }

    // The step actually used: duration split evenly, never above the nominal step.
    double step(const SystemParams& p) const { return duration / static_cast<double>(n_steps(p)); }

    int cadence(const SystemParams& p) const {
        if (current_stride > 0) return current_stride;
        if (!filtered()) return 1;
        return std::max(1, static_cast<int>(std::ceil((1.0 / bandwidth) / (4.0 * step(p)) - 1e-9)));
    }

    std::vector<std::string> violations(const SystemParams& p) const {
        std::vector<std::string> v;
        if (!(r >= 0.0 && r <= 1.0)) v.push_back("r: must lie in [0, 1] (got " + std::to_string(r) + ")");
        if (!(duration > 0.0) || !std::isfinite(duration)) v.push_back("duration: must be positive and finite");
        if (dt < 0.0 || !std::isfinite(dt)) v.push_back("dt: must be positive (0 selects automatically)");
        if (dt > 0.0 && dt > beat_limit(p) * (1 + 1e-12))
            v.push_back("dt: must not exceed pi/(40 g) = " + std::to_string(beat_limit(p)));
        if (filtered()) {
            if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) v.push_back("bandwidth_B: must be positive");
            else if (duration > 0 && bandwidth * nominal_dt(p) > 0.1 * (1 + 1e-12))
                v.push_back("bandwidth_B: B*dt must not exceed 0.1");
        }
        if (snapshot_stride < 0) v.push_back("snapshot_stride: must be >= 0");
        if (current_stride < 0) v.push_back("current_stride: must be >= 0");
        for (std::size_t k = 0; k < observe_times.size(); ++k) {
            if (observe_times[k] < 0 || observe_times[k] > duration * (1 + 1e-12))
                v.push_back("observe_times: entries must lie in [0, duration]");
            if (k > 0 && observe_times[k] < observe_times[k - 1]) v.push_back("observe_times: must be nondecreasing");
        }
        if (!(max_jump_probability > 0 && max_jump_probability < 1))
            v.push_back("max_jump_probability: must lie in (0, 1)");
        return v;
    }

    void validate(const SystemParams& p) const {
        auto v = violations(p);
        if (!v.empty()) throw ValidationError(std::move(v));
    }
};

struct Jump {
    double t;
    Channel channel;
    bool operator==(const Jump&) const = default;
};

struct CurrentSample {
    double t;
    cplx i;
    bool operator==(const CurrentSample&) const = default;
};

struct Snapshot {
    double t;
    Vec psi;
};

struct Observation {
    double t;
    double photon_number;
    double quadrature;  // <A_theta(t)>
    double excitation;  // <sigma_+ sigma_->
    cplx field;         // <a>
};

struct TrajectoryRecord {
    SystemParams params;
    UnravelingConfig config;
    double dt = 0;
    long steps = 0;
    int cadence = 1;
    bool complex_current = false;
    std::vector<Jump> jumps;
    std::vector<CurrentSample> current;
    std::vector<Snapshot> snapshots;
    std::vector<Observation> observations;
    std::vector<Snapshot> jump_states;
    Vec final_state;
    double log_norm_since_jump = 0;  // log of the no-jump norm^2 accumulated since the last jump
    double max_top_population = 0;

    std::size_t count(Channel c) const {
        std::size_t n = 0;
        for (const auto& j : jumps) n += (j.channel == c);
        return n;
    }

    std::vector<double> jump_times(Channel c) const {
        std::vector<double> t;
        for (const auto& j : jumps)
            if (j.channel == c) t.push_back(j.t);
        return t;
    }
};

// Single-trajectory integrator shared by the direct, wave-particle and heterodyne unravelings.
class Unraveling {
public:
    Unraveling(const SystemParams& p, const UnravelingConfig& cfg) : p_(p), cfg_(cfg), k_(p) {
        p.validate();
        cfg.validate(p);
        if (cfg.scheme == UnravelingScheme::free_decay)
            throw ValidationError({"scheme: free_decay runs through free_decay_tomography"});
        dt_ = cfg.step(p);
        steps_ = cfg.n_steps(p);
        cadence_ = cfg.cadence(p);
        decay_ = std::exp(-cfg.bandwidth * dt_);
        gain_ = (1.0 - decay_) / dt_;
    }

    const JcKernel& kernel() const { return k_; }
    double dt() const { return dt_; }
    long steps() const { return steps_; }
    int cadence() const { return cadence_; }
    double delta(double t) const { return cfg_.detuning ? (*cfg_.detuning)(t) : p_.delta_omega_d; }
    double theta(double t) const { return cfg_.theta(t); }

    // Per-step click probabilities (cavity/APD, spontaneous) for a state.
    std::pair<double, double> jump_probabilities(const Vec& psi) const {
        const double n = k_.photon_number(psi), s = k_.excitation(psi);
        double cav = 0;
        if (cfg_.scheme == UnravelingScheme::direct) cav = 2 * p_.kappa * n * dt_;
        if (cfg_.scheme == UnravelingScheme::wave_particle) cav = 2 * p_.kappa * cfg_.r * n * dt_;
        return {cav, p_.gamma * s * dt_};
    }

    // Continuous part of one step. Returns the unnormalized state; 'signal' receives the current's drift term.
    Vec advance(const Vec& psi, double t, const Increments<2>& inc, cplx& signal) const {
        switch (cfg_.scheme) {
            case UnravelingScheme::direct: signal = 0; return rk4(psi, t, dt_);
            case UnravelingScheme::wave_particle: return homodyne(psi, t, inc, signal);
            case UnravelingScheme::heterodyne: return heterodyne(psi, t, inc, signal);
            default: throw Error("unsupported scheme");
        }
    }

    // Noise entering the current: dW (wave-particle) or dZ = (dW_x + i dW_y)/sqrt2 (heterodyne).
    cplx noise(const Increments<2>& inc) const {
        if (cfg_.scheme == UnravelingScheme::heterodyne) return cplx(inc.dw[0], inc.dw[1]) / std::sqrt(2.0);
        return inc.dw[0];
    }

    // RC filter di = -B(i dt - signal dt - noise), integrated exactly for a piecewise-constant input.
    cplx filter(cplx current, cplx signal, cplx noise) const {
        return decay_ * current + gain_ * (signal * dt_ + noise);
    }

    double filter_decay() const { return decay_; }
    double filter_gain() const { return gain_; }

    Increments<2> draw(RandomStream& rs) const {
        Increments<2> inc;
        if (cfg_.scheme == UnravelingScheme::wave_particle) {
            inc.dw[0] = std::sqrt(dt_) * rs.normal();
            inc.v[0][0] = inc.v[1][1] = -dt_;
        } else if (cfg_.scheme == UnravelingScheme::heterodyne) {
            inc = draw_increments<2>(rs, dt_);
        }
        return inc;
    }

    TrajectoryRecord run(const Vec& psi0) const {
        if (psi0.size() != k_.dim()) throw DimensionMismatch("initial state has wrong dimension");
        const double n0 = psi0.norm();
        if (!(n0 > 0) || !std::isfinite(n0)) throw NormalizationError("initial state has zero norm");

        TrajectoryRecord rec;
        rec.params = p_;
        rec.config = cfg_;
        rec.dt = dt_;
        rec.steps = steps_;
        rec.cadence = cadence_;
        rec.complex_current = cfg_.scheme == UnravelingScheme::heterodyne;

        std::vector<long> obs_steps;
        for (double t : cfg_.observe_times) obs_steps.push_back(std::min(steps_, std::lround(t / dt_)));
        std::size_t oi = 0;

        RandomStream rs(cfg_.seed, cfg_.index);
        Vec psi = psi0 / n0;
        Vec tmp;
        cplx cur = 0;
        double log_norm = 0;
        const bool has_current = cfg_.filtered();

        for (long s = 0;; ++s) {
            const double t = static_cast<double>(s) * dt_;
            while (oi < obs_steps.size() && obs_steps[oi] == s) {
                rec.observations.push_back(
                    {t, k_.photon_number(psi), k_.quadrature(psi, theta(t)), k_.excitation(psi), k_.field(psi)});
                ++oi;
            }
            if (cfg_.snapshot_stride > 0 && s % cfg_.snapshot_stride == 0) rec.snapshots.push_back({t, psi});
            if (has_current && s % cadence_ == 0) rec.current.push_back({t, cur});
            rec.max_top_population = std::max(rec.max_top_population, k_.top_population(psi));
            if (s == steps_) break;

            const auto [p_cav, p_sp] = jump_probabilities(psi);
            if (p_cav + p_sp > cfg_.max_jump_probability)
                throw DtTooLarge("per-step jump probability " + std::to_string(p_cav + p_sp) + " exceeds " +
                                 std::to_string(cfg_.max_jump_probability) + " at t=" + std::to_string(t));
            const Increments<2> inc = draw(rs);
            cplx signal;
            psi = advance(psi, t, inc, signal);
            if (has_current) cur = filter(cur, signal, noise(inc));

            const double nn = psi.squaredNorm();
            if (!(nn > 0) || !std::isfinite(nn)) throw NormalizationError("state norm lost at t=" + std::to_string(t));
            log_norm += std::log(nn);
            psi /= std::sqrt(nn);

            const double u = rs.uniform();
            if (u < p_cav + p_sp) {
                const bool cav = u < p_cav;
                if (cav) k_.apply_a(psi, tmp);
                else k_.apply_sm(psi, tmp);
                const double jn = tmp.norm();
                if (!(jn > 0)) throw NormalizationError("jump annihilated the state");
                psi = tmp / jn;
                rec.jumps.push_back({t + dt_, cav ? Channel::cavity : Channel::spontaneous});
                if (cfg_.record_jump_states) rec.jump_states.push_back({t + dt_, psi});
                log_norm = 0;
            }
        }
        rec.final_state = psi;
        rec.log_norm_since_jump = log_norm;
        return rec;
    }

private:
    Vec heff(const Vec& y, double t) const {
        Vec out;
        k_.apply_heff(y, out, delta(t));
        return out;
    }

    Vec rk4(const Vec& y, double t, double h) const {
        const cplx mi(0, -1);
        Vec k1 = mi * heff(y, t);
        Vec k2 = mi * heff(y + 0.5 * h * k1, t + 0.5 * h);
        Vec k3 = mi * heff(y + 0.5 * h * k2, t + 0.5 * h);
        Vec k4 = mi * heff(y + h * k3, t + h);
        return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    // Strang splitting: half-steps of the coherent part -iH' by RK4 around the measurement SDE
    // dy = <c + c^dag> c y dt + c y dW, c = sqrt(2 kappa (1-r)) e^{-i theta} a. Explicit steppers applied to
    // -iH' directly are unstable at g sqrt(n) dt ~ 0.2 (amplification of the fastest dressed states).
    Vec homodyne(const Vec& psi0, double t, const Increments<2>& inc, cplx& signal) const {
        const double h = 0.5 * dt_;
        const Vec psi = rk4(psi0, t, h);
        const double amp = std::sqrt(2 * p_.kappa * (1 - cfg_.r));
        auto cop = [&](double tt, const Vec& y) {
            Vec out;
            k_.apply_a(y, out);
            return Vec(out * (amp * std::exp(cplx(0, -theta(tt)))));
        };
        auto drift = [&](double tt, const Vec& y) -> Vec {
            const Vec cy = cop(tt, y);
            const double m = 2.0 * y.dot(cy).real() / y.squaredNorm();
            return m * cy;
        };
        auto diff = [&](double tt, const Vec& y, int) -> Vec { return cop(tt, y); };
        signal = 2.0 * psi.dot(cop(t + h, psi)).real() / psi.squaredNorm();
        Increments<1> one;
        one.dw[0] = inc.dw[0];
        one.v[0][0] = -dt_;
        // Measurement operators are frozen at the midpoint time.
        auto drift_mid = [&](double, const Vec& y) -> Vec { return drift(t + h, y); };
        auto diff_mid = [&](double, const Vec& y, int j) -> Vec { return diff(t + h, y, j); };
        return rk4(sde_step<1>(cfg_.integrator, psi, t, dt_, one, drift_mid, diff_mid), t + h, h);
    }

    // Same splitting; measurement SDE dy = <c^dag> c y dt + c y dZ with c = sqrt(2 kappa) a.
    Vec heterodyne(const Vec& psi0, double t, const Increments<2>& inc, cplx& signal) const {
        const double h = 0.5 * dt_;
        const Vec psi = rk4(psi0, t, h);
        const double amp = std::sqrt(2 * p_.kappa);
        auto cop = [&](const Vec& y) {
            Vec out;
            k_.apply_a(y, out);
            return Vec(amp * out);
        };
        auto drift = [&](double tt, const Vec& y) -> Vec {
            const Vec cy = cop(y);
            const cplx cdag = std::conj(y.dot(cy) / y.squaredNorm());
            (void)tt;
            return cdag * cy;
        };
        const double r2 = 1.0 / std::sqrt(2.0);
        auto diff = [&](double, const Vec& y, int j) -> Vec {
            return cop(y) * (j == 0 ? cplx(r2, 0) : cplx(0, r2));
        };
        signal = std::conj(psi.dot(cop(psi)) / psi.squaredNorm());
        return rk4(sde_step<2>(cfg_.integrator, psi, t, dt_, inc, drift, diff), t + h, h);
    }

    SystemParams p_;
    UnravelingConfig cfg_;
    JcKernel k_;
    double dt_ = 0;
    long steps_ = 0;
    int cadence_ = 1;
    double decay_ = 1, gain_ = 0;
};

inline TrajectoryRecord run_trajectory(const SystemParams& p, const UnravelingConfig& cfg, const Vec& psi0) {
    return Unraveling(p, cfg).run(psi0);
}

inline TrajectoryRecord run_direct(const SystemParams& p, UnravelingConfig cfg, const Vec& psi0) {
    if (cfg.scheme != UnravelingScheme::direct) throw ValidationError({"scheme: run_direct requires scheme=direct"});
    return run_trajectory(p, cfg, psi0);
}

inline TrajectoryRecord run_wave_particle(const SystemParams& p, UnravelingConfig cfg, const Vec& psi0) {
    if (cfg.scheme != UnravelingScheme::wave_particle)
        throw ValidationError({"scheme: run_wave_particle requires scheme=wave_particle"});
    return run_trajectory(p, cfg, psi0);
}

inline TrajectoryRecord run_heterodyne(const SystemParams& p, UnravelingConfig cfg, const Vec& psi0) {
    if (cfg.scheme != UnravelingScheme::heterodyne)
        throw ValidationError({"scheme: run_heterodyne requires scheme=heterodyne"});
    return run_trajectory(p, cfg, psi0);
}

}  // namespace mpjc
