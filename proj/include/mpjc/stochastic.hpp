#pragma once

#include "types.hpp"

#include <array>
#include <cstdint>
#include <random>

namespace mpjc {

// SplitMix64 finalizer, used only to derive well-separated seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t sub = 0) {
    return splitmix64(splitmix64(splitmix64(seed) ^ index) ^ (sub * 0xd1b54a32d192ed03ULL));
}

// One independent random stream per (seed, trajectory index, purpose).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t index = 0, std::uint64_t sub = 0)
        : eng_(stream_seed(seed, index, sub)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
    double normal() { return normal_(eng_); }
    bool coin() { return (eng_() >> 63) != 0; }
    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

enum class NoiseKind { gaussian, three_point };
enum class SdeScheme { weak2, euler_maruyama };

inline const char* to_string(SdeScheme s) { return s == SdeScheme::weak2 ? "weak2" : "euler-maruyama"; }

// Increments for one step: dW^j and the auxiliary two-point variables V_{j1,j2}.
template <int M>
struct Increments {
    std::array<double, M> dw{};
    std::array<std::array<double, M>, M> v{};
};

template <int M>
Increments<M> draw_increments(RandomStream& rs, double dt, NoiseKind kind = NoiseKind::gaussian) {
    Increments<M> inc;
    const double sq = std::sqrt(dt);
    for (int j = 0; j < M; ++j) {
        if (kind == NoiseKind::gaussian) {
            inc.dw[j] = sq * rs.normal();
        } else {
            const double u = rs.uniform();
            inc.dw[j] = u < 1.0 / 6.0 ? std::sqrt(3.0 * dt) : (u < 1.0 / 3.0 ? -std::sqrt(3.0 * dt) : 0.0);
        }
    }
    for (int j = 0; j < M; ++j) {
        inc.v[j][j] = -dt;
        for (int k = 0; k < j; ++k) {
            inc.v[j][k] = rs.coin() ? dt : -dt;
            inc.v[k][j] = -inc.v[j][k];
        }
    }
    return inc;
}

// Explicit order-2.0 weak scheme (Kloeden and Platen, Sec. 15.1) for dY = a(t,Y)dt + sum_j b_j(t,Y) dW^j.
// a(t, y) -> State; b(t, y, j) -> State.
template <int M, class State, class Drift, class Diffusion>
State weak2_step(const State& y, double t, double dt, const Increments<M>& inc, Drift&& a, Diffusion&& b) {
    const double sq = std::sqrt(dt);
    const double isq = 1.0 / sq;
    const State a0 = a(t, y);
    std::array<State, M> b0;
    for (int j = 0; j < M; ++j) b0[j] = b(t, y, j);

    State ybar = y + a0 * dt;
    State base = ybar;
    for (int j = 0; j < M; ++j) ybar = ybar + b0[j] * inc.dw[j];

    State out = y + (a(t + dt, ybar) + a0) * (0.5 * dt);
    for (int j = 0; j < M; ++j) {
        const State rp = b(t + dt, State(base + b0[j] * sq), j);
        const State rm = b(t + dt, State(base - b0[j] * sq), j);
        const double dwj = inc.dw[j];
        out = out + (rp + rm + b0[j] * 2.0) * (0.25 * dwj) + (rp - rm) * (0.25 * (dwj * dwj - dt) * isq);
        for (int r = 0; r < M; ++r) {
            if (r == j) continue;
            const State up = b(t, State(y + b0[r] * sq), j);
            const State um = b(t, State(y - b0[r] * sq), j);
            out = out + (up + um - b0[j] * 2.0) * (0.25 * dwj * isq) +
                  (up - um) * (0.25 * (dwj * inc.dw[r] + inc.v[r][j]) * isq);
        }
    }
    return out;
}

template <int M, class State, class Drift, class Diffusion>
State euler_maruyama_step(const State& y, double t, double dt, const Increments<M>& inc, Drift&& a, Diffusion&& b) {
    State out = y + a(t, y) * dt;
    for (int j = 0; j < M; ++j) out = out + b(t, y, j) * inc.dw[j];
    return out;
}

template <int M, class State, class Drift, class Diffusion>
State sde_step(SdeScheme s, const State& y, double t, double dt, const Increments<M>& inc, Drift&& a, Diffusion&& b) {
    return s == SdeScheme::weak2 ? weak2_step<M>(y, t, dt, inc, a, b) : euler_maruyama_step<M>(y, t, dt, inc, a, b);
}

}  // namespace mpjc
