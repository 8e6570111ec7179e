#pragma once

#include "trajectory.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace mpjc {

// Worker count: JC_THREADS if set, else the hardware concurrency; never more than the job count.
inline unsigned worker_count(std::size_t jobs) {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("JC_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = static_cast<unsigned>(v);
    }
    return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, jobs)));
}

// Runs f(i) for i in [0, n). Results must be written to per-index slots; the first failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const unsigned workers = worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_at = n;
    std::exception_ptr err;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (i < failed_at) {
                    failed_at = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// Mean and standard error of per-trajectory observations at the configured checkpoints.
struct EnsembleStats {
    std::size_t trajectories = 0;
    std::vector<double> t;
    std::vector<double> mean_n, se_n;
    std::vector<double> mean_quadrature, se_quadrature;
    std::vector<double> mean_excitation, se_excitation;
};

struct EnsembleResult {
    std::vector<TrajectoryRecord> records;
    EnsembleStats stats;
};

inline EnsembleStats ensemble_stats(const std::vector<TrajectoryRecord>& recs) {
    EnsembleStats s;
    s.trajectories = recs.size();
    if (recs.empty()) return s;
    const std::size_t m = recs.front().observations.size();
    auto reduce = [&](auto get, std::vector<double>& mean, std::vector<double>& se) {
        mean.assign(m, 0.0);
        se.assign(m, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            double mu = 0, m2 = 0;
            std::size_t n = 0;
            for (const auto& r : recs) {  // fixed order: reproducible regardless of scheduling
                const double x = get(r.observations.at(k));
                ++n;
                const double d = x - mu;
                mu += d / static_cast<double>(n);
                m2 += d * (x - mu);
            }
            mean[k] = mu;
            se[k] = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
        }
    };
    for (std::size_t k = 0; k < m; ++k) s.t.push_back(recs.front().observations[k].t);
    reduce([](const Observation& o) { return o.photon_number; }, s.mean_n, s.se_n);
    reduce([](const Observation& o) { return o.quadrature; }, s.mean_quadrature, s.se_quadrature);
    reduce([](const Observation& o) { return o.excitation; }, s.mean_excitation, s.se_excitation);
    return s;
}

// Trajectory i uses stream (cfg.seed, i); the result does not depend on the worker count.
inline EnsembleResult run_ensemble(const SystemParams& p, const UnravelingConfig& cfg, const Vec& psi0,
                                   std::size_t n_trajectories) {
    if (n_trajectories == 0) throw ValidationError({"n_trajectories: must be >= 1"});
    Unraveling probe(p, cfg);  // validates once up front
    (void)probe;
    EnsembleResult res;
    res.records.resize(n_trajectories);
    parallel_for(n_trajectories, [&](std::size_t i) {
        UnravelingConfig c = cfg;
        c.index = i;
        res.records[i] = run_trajectory(p, c, psi0);
    });
    res.stats = ensemble_stats(res.records);
    return res;
}

}  // namespace mpjc
