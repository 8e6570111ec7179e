#pragma once

#include "correlations.hpp"
#include "trajectory.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace mpjc {

// ---------------------------------------------------------------------------
// Operational wave-particle correlation: average of the filtered current at click times + tau.

namespace detail {

inline double current_at(const TrajectoryRecord& rec, double t) {
    const auto& c = rec.current;
    const double h = rec.dt * rec.cadence;
    const double f = t / h;
    auto k = static_cast<std::size_t>(std::floor(f));
    if (k + 1 >= c.size()) return c.back().i.real();
    const double w = f - static_cast<double>(k);
    return (1 - w) * c[k].i.real() + w * c[k + 1].i.real();
}

}  // namespace detail

// Average of i(t_j + tau) over the supplied start times (per record); tau in units of 1/kappa.
// Start times whose window leaves the record are skipped.
inline CorrelationSeries sample_current(const std::vector<TrajectoryRecord>& recs,
                                        const std::vector<std::vector<double>>& starts,
                                        const std::vector<double>& tau) {
    if (recs.size() != starts.size()) throw DimensionMismatch("one start-time list per record");
    if (tau.empty() || !strictly_increasing(tau)) throw ValidationError({"tau: grid must be strictly increasing"});
    CorrelationSeries s;
    s.tau = tau;
    s.values.assign(tau.size(), 0.0);
    s.kind = CorrelationKind::H_theta;
    s.normalization = "operational";
    std::size_t used = 0;
    for (std::size_t r = 0; r < recs.size(); ++r) {
        const auto& rec = recs[r];
        if (rec.current.size() < 2) continue;
        const double kappa = rec.params.kappa;
        const double t_end = rec.current.back().t;
        for (double tj : starts[r]) {
            if (tj + tau.front() / kappa < 0 || tj + tau.back() / kappa > t_end) continue;
            for (std::size_t k = 0; k < tau.size(); ++k) s.values[k] += detail::current_at(rec, tj + tau[k] / kappa);
            ++used;
        }
    }
    if (used == 0) throw EmptyEstimate("no start times inside the recorded current");
    for (auto& v : s.values) v /= static_cast<double>(used);
    s.params = recs.front().params;
    s.meta.emplace_back("N_s", std::to_string(used));
    const double b = recs.front().config.bandwidth;
    s.meta.emplace_back("bandwidth_B", std::to_string(b));
    s.meta.emplace_back("noise_scale", std::to_string(std::sqrt(b / (2.0 * static_cast<double>(used)))));
    return s;
}

inline std::size_t series_count(const CorrelationSeries& s, const std::string& key) {
    for (const auto& [k, v] : s.meta)
        if (k == key) return static_cast<std::size_t>(std::stoull(v));
    throw Error("series has no '" + key + "' entry");
}

inline double series_value(const CorrelationSeries& s, const std::string& key) {
    for (const auto& [k, v] : s.meta)
        if (k == key) return std::stod(v);
    throw Error("series has no '" + key + "' entry");
}

// Residual shot-noise standard deviation of the estimate: sqrt(B / (2 N_s)).
inline double operational_noise_scale(double bandwidth, std::size_t n_s) {
    return std::sqrt(bandwidth / (2.0 * static_cast<double>(n_s)));
}

// Clicks before t_burn (transient) are not used as start times.
inline CorrelationSeries sample_h_operational(const std::vector<TrajectoryRecord>& recs, const std::vector<double>& tau,
                                              double t_burn = 0.0) {
    if (recs.empty()) throw EmptyEstimate("no records");
    std::vector<std::vector<double>> starts;
    for (const auto& r : recs) {
        if (r.config.scheme != UnravelingScheme::wave_particle || !(r.config.r > 0 && r.config.r < 1))
            throw ValidationError({"record: sample-h needs a wave_particle record with 0 < r < 1"});
        std::vector<double> t;
        for (double x : r.jump_times(Channel::cavity))
            if (x >= t_burn) t.push_back(x);
        starts.push_back(std::move(t));
    }
    auto s = sample_current(recs, starts, tau);
    if (recs.front().config.theta.constant()) s.theta = recs.front().config.theta(0.0);
    return s;
}

inline CorrelationSeries sample_h_operational(const TrajectoryRecord& rec, const std::vector<double>& tau,
                                              double t_burn = 0.0) {
    return sample_h_operational(std::vector<TrajectoryRecord>{rec}, tau, t_burn);
}

// Expected operational series: sqrt(8 kappa (1-r)) times the per-photon H_theta convolved with the
// detector response B e^{-B s}. tau in units of 1/kappa.
inline std::vector<double> filtered_h_prediction(CorrelationEngine& eng, double theta, double r, double bandwidth,
                                                 const std::vector<double>& tau) {
    const double kappa = eng.params().kappa;
    const double bk = bandwidth / kappa;  // filter rate in kappa units
    const double tail = 12.0 / bk;
    const double ds = std::min(0.01, 0.02 / bk);
    const double lo = tau.front() - tail, hi = tau.back();
    std::vector<double> grid;
    for (double x = lo; x <= hi + 0.5 * ds; x += ds) grid.push_back(x);
    // Both sides of the discontinuity at zero.
    std::vector<double> pos, neg;
    for (double x : grid) (x >= 0 ? pos : neg).push_back(x);
    std::vector<double> h(grid.size());
    if (!neg.empty()) {
        auto hn = eng.h_theta(theta, neg, HNormalization::per_photon);
        std::copy(hn.values.begin(), hn.values.end(), h.begin());
    }
    if (!pos.empty()) {
        auto hp = eng.h_theta(theta, pos, HNormalization::per_photon);
        std::copy(hp.values.begin(), hp.values.end(), h.begin() + static_cast<long>(neg.size()));
    }
    const double gain = std::sqrt(8.0 * kappa * (1.0 - r));
    std::vector<double> out;
    for (double t : tau) {
        // integral_0^tail bk e^{-bk s} h(t - s) ds by the trapezoid rule on the fine grid
        double acc = 0, norm = 0;
        const auto i0 = static_cast<long>(std::llround((t - lo) / ds));
        for (long k = 0; i0 - k >= 0 && k * ds <= tail; ++k) {
            const double w = (k == 0 ? 0.5 : 1.0) * bk * std::exp(-bk * k * ds) * ds;
            acc += w * h[static_cast<std::size_t>(i0 - k)];
            norm += w;
        }
        out.push_back(gain * acc / norm);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Waiting times.

struct WaitingHistogram {
    CorrelationSeries series;  // density per unit kappa*tau at bin centres
    std::vector<double> intervals;
    std::size_t count = 0;
    double mean = 0;
    double variance = 0;
};

// Intervals between successive clicks of one channel within each record, in units of 1/kappa.
inline std::vector<double> waiting_intervals(const std::vector<TrajectoryRecord>& recs, Channel ch) {
    std::vector<double> out;
    for (const auto& r : recs) {
        const auto t = r.jump_times(ch);
        for (std::size_t k = 1; k < t.size(); ++k) out.push_back((t[k] - t[k - 1]) * r.params.kappa);
    }
    return out;
}

inline WaitingHistogram waiting_histogram(const std::vector<TrajectoryRecord>& recs, Channel ch,
                                          double bin_width = 0.05, double t_max = 0.0) {
    WaitingHistogram h;
    h.intervals = waiting_intervals(recs, ch);
    if (h.intervals.empty()) throw InsufficientData("waiting histogram needs at least two clicks on the channel");
    if (!(bin_width > 0)) throw ValidationError({"bin_width: must be positive"});
    h.count = h.intervals.size();
    const double n = static_cast<double>(h.count);
    h.mean = std::accumulate(h.intervals.begin(), h.intervals.end(), 0.0) / n;
    for (double x : h.intervals) h.variance += (x - h.mean) * (x - h.mean);
    h.variance = h.count > 1 ? h.variance / (n - 1) : 0.0;
    const double top = t_max > 0 ? t_max : *std::max_element(h.intervals.begin(), h.intervals.end());
    const auto bins = static_cast<std::size_t>(std::ceil(top / bin_width));
    std::vector<double> counts(std::max<std::size_t>(bins, 1), 0.0);
    for (double x : h.intervals) {
        const auto b = static_cast<std::size_t>(x / bin_width);
        if (b < counts.size()) counts[b] += 1;
    }
    auto& s = h.series;
    s.kind = ch == Channel::cavity ? CorrelationKind::wait_forward : CorrelationKind::wait_side;
    s.normalization = "density";
    s.params = recs.front().params;
    for (std::size_t b = 0; b < counts.size(); ++b) {
        s.tau.push_back((static_cast<double>(b) + 0.5) * bin_width);
        s.values.push_back(counts[b] / (n * bin_width));
    }
    s.meta.emplace_back("count", std::to_string(h.count));
    s.meta.emplace_back("mean", std::to_string(h.mean));
    s.meta.emplace_back("variance", std::to_string(h.variance));
    return h;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov tests (asymptotic Kolmogorov distribution with the usual small-sample correction).

struct KsResult {
    double statistic = 0;
    double p_value = 1;
};

inline double kolmogorov_q(double lambda) {
    if (lambda <= 0) return 1.0;
    if (lambda < 1.18) {
        // Q = 1 - sqrt(2 pi)/lambda sum_k exp(-(2k-1)^2 pi^2 / (8 lambda^2))
        const double y = std::exp(-pi * pi / (8 * lambda * lambda));
        double s = 0;
        for (int k = 1; k <= 6; ++k) s += std::pow(y, (2 * k - 1) * (2 * k - 1));
        return std::clamp(1.0 - std::sqrt(2 * pi) / lambda * s, 0.0, 1.0);
    }
    double s = 0;
    for (int k = 1; k <= 100; ++k) s += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(s, 0.0, 1.0);
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InsufficientData("KS test needs non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

inline KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
    if (x.empty()) throw InsufficientData("KS test needs a non-empty sample");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double f = cdf(x[k]);
        d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
    }
    const double ne = std::sqrt(n);
    return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

// ---------------------------------------------------------------------------
// Time-averaged pure-state resolution of the density matrix over a window of snapshots.

inline Mat time_averaged_state(const TrajectoryRecord& rec, double t0, double t1) {
    if (!(t1 >= t0)) throw EmptyEstimate("empty window");
    const auto& sn = rec.snapshots;
    if (sn.empty()) throw EmptyEstimate("record has no snapshots");
    if (t1 == t0) {
        auto it = std::min_element(sn.begin(), sn.end(), [&](const Snapshot& a, const Snapshot& b) {
            return std::abs(a.t - t0) < std::abs(b.t - t0);
        });
        return it->psi * it->psi.adjoint();
    }
    std::vector<const Snapshot*> in;
    for (const auto& s : sn)
        if (s.t >= t0 - 1e-12 && s.t <= t1 + 1e-12) in.push_back(&s);
    if (in.size() < 2) throw EmptyEstimate("window holds fewer than two snapshots");
    const auto d = in.front()->psi.size();
    Mat acc = Mat::Zero(d, d);
    double span = 0;
    for (std::size_t k = 1; k < in.size(); ++k) {
        const double w = in[k]->t - in[k - 1]->t;
        acc += 0.5 * w * (in[k]->psi * in[k]->psi.adjoint() + in[k - 1]->psi * in[k - 1]->psi.adjoint());
        span += w;
    }
    Mat rho = acc / span;
    return 0.5 * (rho + rho.adjoint());
}

inline double trace_distance(const Mat& a, const Mat& b) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * ((a - b) + (a - b).adjoint()));
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace mpjc
