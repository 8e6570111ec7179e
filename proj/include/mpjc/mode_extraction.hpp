#pragma once

#include "types.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <vector>

namespace mpjc {

// y(t_n) ~ sum_k amplitude_k exp(pole_k t_n); pole = -decay + i omega.
struct Mode {
    cplx pole;
    cplx amplitude;
    double decay() const { return -pole.real(); }
    double frequency() const { return std::abs(pole.imag()); }
};

// Matrix-pencil fit of uniformly sampled data with step dt.
inline std::vector<Mode> matrix_pencil(const std::vector<double>& y, double dt, double sv_tol = 1e-9,
                                       int max_order = 60) {
    const auto n = static_cast<Eigen::Index>(y.size());
    if (n < 8) throw InsufficientData("matrix pencil needs at least 8 samples");
    const Eigen::Index lp = std::min<Eigen::Index>(n / 3, 400);
    const Eigen::Index rows = n - lp;
    Eigen::MatrixXd hk(rows, lp + 1);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j <= lp; ++j) hk(i, j) = y[static_cast<std::size_t>(i + j)];

    Eigen::BDCSVD<Eigen::MatrixXd> svd(hk, Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Eigen::Index order = 0;
    while (order < s.size() && s(order) > sv_tol * s(0) && order < max_order) ++order;
    if (order == 0) return {};

    Eigen::MatrixXd v = svd.matrixV().leftCols(order);
    Eigen::MatrixXd v1 = v.topRows(lp);
    Eigen::MatrixXd v2 = v.bottomRows(lp);
    Eigen::MatrixXd a = v1.completeOrthogonalDecomposition().pseudoInverse() * v2;
    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    Eigen::VectorXcd z = es.eigenvalues();

    Mat zm(n, order);
    for (Eigen::Index k = 0; k < order; ++k) {
        cplx p = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            zm(i, k) = p;
            p *= z(k);
        }
    }
    Vec yc(n);
    for (Eigen::Index i = 0; i < n; ++i) yc(i) = y[static_cast<std::size_t>(i)];
    Vec amp = zm.colPivHouseholderQr().solve(yc);

    std::vector<Mode> modes;
    for (Eigen::Index k = 0; k < order; ++k) modes.push_back({std::log(z(k)) / dt, amp(k)});
    std::sort(modes.begin(), modes.end(),
              [](const Mode& l, const Mode& r) { return std::abs(l.amplitude) > std::abs(r.amplitude); });
    return modes;
}

// Largest-amplitude mode with frequency in [lo, hi]; nullptr when none.
inline const Mode* dominant_mode(const std::vector<Mode>& modes, double lo, double hi) {
    const Mode* best = nullptr;
    for (const auto& m : modes)
        if (m.frequency() >= lo && m.frequency() <= hi && (!best || std::abs(m.amplitude) > std::abs(best->amplitude)))
            best = &m;
    return best;
}

// Sum of |amplitude| over modes in the band (conjugate partners both counted).
inline double band_weight(const std::vector<Mode>& modes, double lo, double hi) {
    double w = 0;
    for (const auto& m : modes)
        if (m.frequency() >= lo && m.frequency() <= hi) w += std::abs(m.amplitude);
    return w;
}

}  // namespace mpjc
