#pragma once

#include "types.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mpjc {

// Phase-space coordinate alpha = x + i y; quadrature x_theta = Re(e^{-i theta} alpha), vacuum variance 1/4.
struct WignerGrid {
    RVec x;
    RVec y;
    RMat values;  // values(ix, iy)
    double cell_area = 0;
    std::optional<Mat> source;  // cavity density matrix, kept for exact marginals
    std::vector<std::string> warnings;

    double normalization() const { return values.sum() * cell_area; }
    double min_value() const { return values.minCoeff(); }
};

inline RVec linspace(double a, double b, int n) {
    if (n < 2) throw Error("linspace needs at least two points");
    return RVec::LinSpaced(n, a, b);
}

namespace detail {

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline void check_cavity_state(const Mat& rho) {
    if (rho.rows() != rho.cols() || rho.rows() < 1) throw DimensionMismatch("cavity density matrix is not square");
}

}  // namespace detail

// Matrix elements <m|D(beta)|n> on a dim-dimensional Fock space (exact, not a truncated exponential).
inline Mat displacement_matrix(cplx beta, int dim) {
    Mat d(dim, dim);
    const double b2 = std::norm(beta);
    const double pre = std::exp(-0.5 * b2);
    for (int m = 0; m < dim; ++m)
        for (int n = 0; n < dim; ++n) {
            if (m >= n) {
                const double f = std::exp(0.5 * (detail::log_factorial(n) - detail::log_factorial(m)));
                d(m, n) = f * std::pow(beta, m - n) * pre *
                          std::assoc_laguerre(static_cast<unsigned>(n), static_cast<unsigned>(m - n), b2);
            } else {
                const double f = std::exp(0.5 * (detail::log_factorial(m) - detail::log_factorial(n)));
                d(m, n) = f * std::pow(-std::conj(beta), n - m) * pre *
                          std::assoc_laguerre(static_cast<unsigned>(m), static_cast<unsigned>(n - m), b2);
            }
        }
    return d;
}

// Closed-form displaced-parity evaluation at a single point. For each diagonal offset k = m - n the
// generalized Laguerre polynomials L_n^{(k)} come from the three-term recurrence in n.
inline double wigner_point(const Mat& rho, cplx alpha) {
    const int d = static_cast<int>(rho.rows());
    const double r2 = std::norm(alpha);
    const double x = 4.0 * r2;
    const cplx a2 = 2.0 * std::conj(alpha);
    double w = 0;
    cplx pw = 1.0;  // (2 alpha*)^k
    for (int k = 0; k < d; ++k) {
        if (k > 0) pw *= a2;
        double lm1 = 0, l0 = 1.0;  // L_{n-1}^{(k)}, L_n^{(k)}
        double f = std::exp(-0.5 * detail::log_factorial(k));  // sqrt(n!/m!) for n = 0
        for (int n = 0; n + k < d; ++n) {
            const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
            const double term = sgn * f * l0 * (rho(n + k, n) * pw).real();
            w += (k == 0) ? term : 2.0 * term;
            const double l1 = ((2.0 * n + 1 + k - x) * l0 - (n + k) * lm1) / (n + 1);
            lm1 = l0;
            l0 = l1;
            f *= std::sqrt((n + 1.0) / (n + k + 1.0));
        }
    }
    return (2.0 / pi) * std::exp(-2.0 * r2) * w;
}

inline double leakage(const Mat& rho_cav) { return rho_cav(rho_cav.rows() - 1, rho_cav.rows() - 1).real(); }

inline WignerGrid wigner(const Mat& rho_cav, const RVec& xg, const RVec& yg) {
    detail::check_cavity_state(rho_cav);
    WignerGrid w;
    w.x = xg;
    w.y = yg;
    w.values.resize(xg.size(), yg.size());
    for (Eigen::Index i = 0; i < xg.size(); ++i)
        for (Eigen::Index j = 0; j < yg.size(); ++j) w.values(i, j) = wigner_point(rho_cav, cplx(xg(i), yg(j)));
    const double dx = xg.size() > 1 ? (xg(xg.size() - 1) - xg(0)) / static_cast<double>(xg.size() - 1) : 0.0;
    const double dy = yg.size() > 1 ? (yg(yg.size() - 1) - yg(0)) / static_cast<double>(yg.size() - 1) : 0.0;
    w.cell_area = dx * dy;
    w.source = rho_cav;
    if (rho_cav.rows() > 1 && leakage(rho_cav) > 1e-6)
        w.warnings.push_back("truncation leakage: top Fock population " + std::to_string(leakage(rho_cav)));
    return w;
}

struct WignerGridSpec {
    double extent = 3.5;
    int points = 141;
    double norm_tol = 1e-4;
    double widen_step = 1.5;
    int max_widen = 8;
};

// Square grid, widened until the normalization invariant holds.
inline WignerGrid wigner_auto(const Mat& rho_cav, WignerGridSpec spec = {}) {
    double ext = spec.extent;
    const double step = 2.0 * spec.extent / (spec.points - 1);
    for (int k = 0;; ++k) {
        const int n = static_cast<int>(std::lround(2.0 * ext / step)) + 1;
        RVec g = linspace(-ext, ext, n);
        auto w = wigner(rho_cav, g, g);
        if (std::abs(w.normalization() - 1.0) < spec.norm_tol) return w;
        if (k >= spec.max_widen) {
            w.warnings.push_back("normalization " + std::to_string(w.normalization()) + " after widening");
            return w;
        }
        ext += spec.widen_step;
    }
}

// Quadrature distribution from a marginal computation.
struct Marginal {
    RVec q;
    RVec p;
    double theta = 0;

    double integral() const {
        double s = 0;
        for (Eigen::Index k = 1; k < q.size(); ++k) s += 0.5 * (p(k) + p(k - 1)) * (q(k) - q(k - 1));
        return s;
    }
};

namespace detail {

inline double bilinear(const WignerGrid& w, double x, double y) {
    const auto nx = w.x.size(), ny = w.y.size();
    if (x < w.x(0) || x > w.x(nx - 1) || y < w.y(0) || y > w.y(ny - 1)) return 0.0;
    const double fx = (x - w.x(0)) / (w.x(nx - 1) - w.x(0)) * static_cast<double>(nx - 1);
    const double fy = (y - w.y(0)) / (w.y(ny - 1) - w.y(0)) * static_cast<double>(ny - 1);
    auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(fx), nx - 2);
    auto j = std::min<Eigen::Index>(static_cast<Eigen::Index>(fy), ny - 2);
    const double tx = fx - static_cast<double>(i), ty = fy - static_cast<double>(j);
    return (1 - tx) * (1 - ty) * w.values(i, j) + tx * (1 - ty) * w.values(i + 1, j) +
           (1 - tx) * ty * w.values(i, j + 1) + tx * ty * w.values(i + 1, j + 1);
}

}  // namespace detail

// Integrate W along the direction orthogonal to theta. With a source state the integrand is
// re-evaluated exactly on rotated points; otherwise the grid is interpolated bilinearly.
inline Marginal marginal(const WignerGrid& w, double theta, bool exact = true) {
    if (w.x.size() < 3 || w.y.size() < 3) throw Error("under-resolved Wigner grid");
    Marginal m;
    m.theta = theta;
    m.q = w.x;
    m.p.resize(w.x.size());
    const cplx rot = std::exp(I * theta);
    const RVec& s = w.y;
    for (Eigen::Index i = 0; i < m.q.size(); ++i) {
        double acc = 0;
        for (Eigen::Index j = 0; j < s.size(); ++j) {
            const cplx alpha = rot * cplx(m.q(i), s(j));
            const double v = (exact && w.source) ? wigner_point(*w.source, alpha)
                                                 : detail::bilinear(w, alpha.real(), alpha.imag());
            const double wt = (j == 0 || j == s.size() - 1) ? 0.5 : 1.0;
            acc += wt * v;
        }
        m.p(i) = acc * (s(1) - s(0));
    }
    return m;
}

// P_theta(q) = sum_mn e^{-i theta m} psi_m(q) rho_mn psi_n(q) e^{i theta n}; Hermite-function oracle.
inline double quadrature_probability(const Mat& rho_cav, double theta, double q) {
    const int d = static_cast<int>(rho_cav.rows());
    Vec psi(d);
    const double norm0 = std::pow(2.0 / pi, 0.25) * std::exp(-q * q);
    // Normalized Hermite functions by the stable three-term recurrence.
    double hm1 = 0, h0 = 1.0;
    const double z = std::sqrt(2.0) * q;
    for (int n = 0; n < d; ++n) {
        psi(n) = norm0 * h0 * std::exp(cplx(0, theta * n));
        const double h1 = std::sqrt(2.0 / (n + 1)) * z * h0 - std::sqrt(static_cast<double>(n) / (n + 1)) * hm1;
        hm1 = h0;
        h0 = h1;
    }
    return (psi.adjoint() * rho_cav * psi)(0).real();
}

// chi_S(mu, nu) = tr[rho exp(i[(mu + i nu) a^dag + (mu - i nu) a])] = tr[rho D(beta)], beta = -nu + i mu.
inline cplx characteristic_function(const Mat& rho_cav, double mu, double nu) {
    detail::check_cavity_state(rho_cav);
    if (mu == 0 && nu == 0) return rho_cav.trace();
    const int d = static_cast<int>(rho_cav.rows());
    return (rho_cav * displacement_matrix(cplx(-nu, mu), d)).trace();
}

// Fourier route: W(alpha) = (1/pi^2) int d^2 beta chi(beta) exp(alpha beta* - alpha* beta), on a square grid.
inline double wigner_from_characteristic(const Mat& rho_cav, cplx alpha, double extent = 7.0, int points = 161) {
    const int d = static_cast<int>(rho_cav.rows());
    const double h = 2.0 * extent / (points - 1);
    double acc = 0;
    for (int i = 0; i < points; ++i)
        for (int j = 0; j < points; ++j) {
            const cplx beta(-extent + i * h, -extent + j * h);
            const cplx chi = (rho_cav * displacement_matrix(beta, d)).trace();
            acc += (chi * std::exp(alpha * std::conj(beta) - std::conj(alpha) * beta)).real();
        }
    return acc * h * h / (pi * pi);
}

// Explicit truncated displaced-parity sum on an enlarged space, (2/pi) sum_n (-1)^n <n|D(-a) rho D(a)|n>.
inline double wigner_parity_sum(const Mat& rho_cav, cplx alpha, int extra = 40) {
    const int d = static_cast<int>(rho_cav.rows());
    const int big = d + extra;
    Mat r = Mat::Zero(big, big);
    r.topLeftCorner(d, d) = rho_cav;
    Mat dm = displacement_matrix(-alpha, big);
    Mat shifted = dm * r * dm.adjoint();
    double w = 0;
    for (int n = 0; n < big; ++n) w += ((n % 2 == 0) ? 1.0 : -1.0) * shifted(n, n).real();
    return 2.0 / pi * w;
}

// Number of local maxima exceeding frac * global maximum (interior points only).
inline int count_peaks(const WignerGrid& w, double frac = 0.2) {
    const double mx = w.values.maxCoeff();
    int n = 0;
    for (Eigen::Index i = 1; i + 1 < w.values.rows(); ++i)
        for (Eigen::Index j = 1; j + 1 < w.values.cols(); ++j) {
            const double v = w.values(i, j);
            if (v < frac * mx) continue;
            bool peak = true;
            for (int di = -1; di <= 1 && peak; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    if ((di || dj) && w.values(i + di, j + dj) > v) {
                        peak = false;
                        break;
                    }
            if (peak) ++n;
        }
    return n;
}

}  // namespace mpjc
