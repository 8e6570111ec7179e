#pragma once

#include "ensemble.hpp"
#include "phase_space.hpp"
#include "stochastic.hpp"

#include <algorithm>
#include <numeric>

namespace mpjc {

// Free decay of the cavity with drive and coupling off, read out by a homodyne detector whose local
// oscillator is temporally matched to e^{-kappa t}. The accumulated charge Q samples the quadrature
// marginal P_theta(Q) of the initial field (vacuum variance 1/4).
struct TomographyConfig {
    double theta = 0.0;
    std::size_t n_samples = 10000;
    std::uint64_t seed = 1;
    double kappa = 1.0;
    double eps_d = 0.0;      // must be zero
    double g = 0.0;          // must be zero
    double dt = 1e-2;        // in units of 1/kappa
    double residual = 1e-4;  // stop once both e^{-2 kappa t} and the conditional photon number fall below this
    double max_time = 40.0;  // in units of 1/kappa
    SdeScheme integrator = SdeScheme::weak2;

    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        if (eps_d != 0.0) v.push_back("eps_d: drive must be off during free decay");
        if (g != 0.0) v.push_back("g: coupling must be off during free decay");
        if (!(kappa > 0)) v.push_back("kappa: must be positive");
        if (n_samples == 0) v.push_back("n_samples: must be >= 1");
        if (!(dt > 0 && dt <= 0.05)) v.push_back("dt: must lie in (0, 0.05]");
        if (!(residual > 0 && residual < 1)) v.push_back("residual: must lie in (0, 1)");
        if (!(max_time > 0)) v.push_back("max_time: must be positive");
        return v;
    }
    void validate() const {
        auto v = violations();
        if (!v.empty()) throw ValidationError(std::move(v));
    }
};

struct Histogram {
    std::vector<double> edges;    // bins + 1
    std::vector<double> density;  // normalized by the total sample count
    std::size_t count = 0;
    std::size_t outside = 0;

    double width(std::size_t b) const { return edges[b + 1] - edges[b]; }
    double centre(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
};

inline Histogram make_histogram(const std::vector<double>& x, double lo, double hi, std::size_t bins) {
    if (!(hi > lo) || bins == 0) throw ValidationError({"histogram: need hi > lo and bins >= 1"});
    Histogram h;
    h.count = x.size();
    for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(lo + (hi - lo) * static_cast<double>(b) / bins);
    std::vector<double> c(bins, 0.0);
    const double w = (hi - lo) / static_cast<double>(bins);
    for (double v : x) {
        if (v < lo || v >= hi) {
            ++h.outside;
            continue;
        }
        c[std::min(bins - 1, static_cast<std::size_t>((v - lo) / w))] += 1;
    }
    for (double v : c) h.density.push_back(x.empty() ? 0.0 : v / (static_cast<double>(x.size()) * w));
    return h;
}

struct TomographyResult {
    std::vector<double> samples;
    Histogram histogram;
    double mean = 0;
    double variance = 0;
    double max_decay_time = 0;  // longest integration time used, units of 1/kappa
};

namespace detail {

// Q from one free-decay realization of the linear stochastic Schroedinger equation
// d psi = [-kappa n dt + c dY] psi, c = sqrt(2 kappa) e^{-i theta} a, dY = <c + c^dag> dt + dW.
inline double decay_sample(const Vec& psi0, const TomographyConfig& cfg, RandomStream& rs, double& t_used) {
    const double k = cfg.kappa;
    const double dt = cfg.dt / k;
    const cplx ph = std::exp(cplx(0, -cfg.theta)) * std::sqrt(2 * k);
    const auto d = psi0.size();
    RVec nvec(d), sq(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        nvec(i) = static_cast<double>(i);
        sq(i) = std::sqrt(static_cast<double>(i + 1));
    }
    auto apply_c = [&](const Vec& y) {
        Vec out(d);
        for (Eigen::Index i = 0; i + 1 < d; ++i) out(i) = ph * sq(i) * y(i + 1);
        out(d - 1) = 0.0;
        return out;
    };
    auto mean_x = [&](const Vec& y) { return 2.0 * y.dot(apply_c(y)).real() / y.squaredNorm(); };
    auto drift = [&](double, const Vec& y) -> Vec {
        const Vec cy = apply_c(y);
        return Vec(-k * nvec.cast<cplx>().cwiseProduct(y) + (2.0 * y.dot(cy).real() / y.squaredNorm()) * cy);
    };
    auto diff = [&](double, const Vec& y, int) -> Vec { return apply_c(y); };
    Vec psi = psi0.normalized();
    double q = 0, t = 0;
    double x0 = mean_x(psi);
    const double lo_norm = std::sqrt(k / 2);
    for (;;) {
        const double env = std::exp(-k * t);
        double n_cond = 0;
        for (int i = 0; i < psi.size(); ++i) n_cond += nvec(i) * std::norm(psi(i));
        if ((env * env < cfg.residual && n_cond < cfg.residual) || t * k >= cfg.max_time) break;
        Increments<1> inc;
        inc.dw[0] = std::sqrt(dt) * rs.normal();
        inc.v[0][0] = -dt;
        psi = sde_step<1>(cfg.integrator, psi, t, dt, inc, drift, diff);
        psi.normalize();
        const double x1 = mean_x(psi);
        // drift part by the trapezoid rule, noise weighted at the midpoint of the envelope
        q += lo_norm * (0.5 * (env * x0 + std::exp(-k * (t + dt)) * x1) * dt + std::exp(-k * (t + 0.5 * dt)) * inc.dw[0]);
        x0 = x1;
        t += dt;
    }
    t_used = std::max(t_used, t * k);
    return q;
}

inline void summarize(TomographyResult& r) {
    const double n = static_cast<double>(r.samples.size());
    r.mean = std::accumulate(r.samples.begin(), r.samples.end(), 0.0) / n;
    for (double x : r.samples) r.variance += (x - r.mean) * (x - r.mean);
    r.variance = r.samples.size() > 1 ? r.variance / (n - 1) : 0.0;
}

}  // namespace detail

// Default histogram range: mean +- 4.5 standard deviations of the exact marginal.
inline std::pair<double, double> marginal_range(const Mat& rho_cav, double theta, double width = 4.5) {
    const auto ops = build_cavity_ops(static_cast<int>(rho_cav.rows()) - 1);
    const cplx ph = std::exp(cplx(0, -theta));
    const Mat x = 0.5 * (ph * ops.a + std::conj(ph) * ops.a_dag);
    const double m = (x * rho_cav).trace().real();
    const double v = (x * x * rho_cav).trace().real() - m * m;
    const double sd = std::sqrt(std::max(v, 1e-12));
    return {m - width * sd, m + width * sd};
}

// Tomography of a cavity density matrix: each sample starts from a pure component drawn with its weight.
inline TomographyResult free_decay_tomography(const Mat& rho_cav, const TomographyConfig& cfg, std::size_t bins = 16) {
    cfg.validate();
    detail::check_cavity_state(rho_cav);
    const int d = static_cast<int>(rho_cav.rows());
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho_cav + rho_cav.adjoint()));
    std::vector<double> w(d);
    for (int i = 0; i < d; ++i) w[i] = std::max(0.0, es.eigenvalues()(i));
    std::vector<double> cdf(d);
    std::partial_sum(w.begin(), w.end(), cdf.begin());
    if (!(cdf.back() > 0)) throw NormalizationError("state has zero trace");

    TomographyResult res;
    res.samples.resize(cfg.n_samples);
    std::vector<double> used(cfg.n_samples, 0.0);
    parallel_for(cfg.n_samples, [&](std::size_t i) {
        RandomStream rs(cfg.seed, i);
        const double u = rs.uniform() * cdf.back();
        const auto comp = static_cast<int>(std::min<std::ptrdiff_t>(
            d - 1, std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()));
        res.samples[i] = detail::decay_sample(es.eigenvectors().col(comp), cfg, rs, used[i]);
    });
    res.max_decay_time = *std::max_element(used.begin(), used.end());
    detail::summarize(res);
    const auto [lo, hi] = marginal_range(rho_cav, cfg.theta);
    res.histogram = make_histogram(res.samples, lo, hi, bins);
    return res;
}

inline TomographyResult free_decay_tomography(const Vec& psi_cav, const TomographyConfig& cfg, std::size_t bins = 16) {
    return free_decay_tomography(Mat(psi_cav * psi_cav.adjoint() / psi_cav.squaredNorm()), cfg, bins);
}

// L1 distance between a histogram and the exact marginal integrated over each bin (Simpson rule);
// probability mass falling outside the histogram range on either side is added.
inline double marginal_l1(const Histogram& h, const Mat& rho_cav, double theta, int sub = 16) {
    double l1 = h.count ? static_cast<double>(h.outside) / static_cast<double>(h.count) : 0.0;
    double inside = 0;
    for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
        const double a = h.edges[b], w = h.width(b), hs = w / sub;
        double acc = 0;
        for (int k = 0; k <= sub; ++k) {
            const double c = (k == 0 || k == sub) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            acc += c * quadrature_probability(rho_cav, theta, a + k * hs);
        }
        const double mass = acc * hs / 3.0;
        inside += mass;
        l1 += std::abs(h.density[b] * w - mass);
    }
    return l1 + std::max(0.0, 1.0 - inside);
}

}  // namespace mpjc
