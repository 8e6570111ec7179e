#pragma once

#include "liouvillian.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <limits>
#include <map>
#include <optional>

#ifdef MPJC_HAVE_LAPACKE
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>
#endif

namespace mpjc {

// L = V diag(lambda) V^{-1}
struct SpectralDecomposition {
    Vec lambda;
    Mat v;
    Mat v_inv;
    double condition = 0;  // 1-norm condition estimate of V

    Vec coefficients(const Vec& x) const { return v_inv * x; }

    // Amplitudes A_k such that r . e^{L t} x = sum_k A_k exp(lambda_k t).
    Vec amplitudes(const Eigen::RowVectorXcd& r, const Vec& x) const {
        Vec c = coefficients(x);
        Eigen::RowVectorXcd w = r * v;
        return w.transpose().cwiseProduct(c);
    }

    Vec evolve(const Vec& x, double t) const {
        Vec c = coefficients(x);
        for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::exp(lambda(k) * t);
        return v * c;
    }
};

inline std::pair<Vec, Mat> eigen_decompose(const Mat& m) {
#ifdef MPJC_HAVE_LAPACKE
    const auto n = static_cast<lapack_int>(m.rows());
    Mat a = m;  // column-major copy, overwritten by zgeev
    Vec w(n);
    Mat vr(n, n);
    lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, a.data(), n, w.data(), nullptr,
                                    1, vr.data(), n);
    if (info != 0) throw SolverError("zgeev failed with info=" + std::to_string(info));
    return {w, vr};
#else
    Eigen::ComplexEigenSolver<Mat> es(m, true);
    if (es.info() != Eigen::Success) throw SolverError("complex eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
#endif
}

inline constexpr double spectral_condition_limit = 1e10;

// Returns nullopt when the eigenbasis is too ill-conditioned to use.
inline std::optional<SpectralDecomposition> spectral_decompose(const Mat& m) {
    auto [w, v] = eigen_decompose(m);
    Eigen::PartialPivLU<Mat> lu(v);
    SpectralDecomposition s;
    s.lambda = w;
    s.v = v;
    s.v_inv = lu.inverse();
    auto norm1 = [](const Mat& x) { return x.cwiseAbs().colwise().sum().maxCoeff(); };
    s.condition = norm1(v) * norm1(s.v_inv);
    if (!std::isfinite(s.condition) || s.condition > spectral_condition_limit) return std::nullopt;
    // Reconstruction probe on a fixed vector instead of a full O(n^3) product.
    Vec probe(m.rows());
    for (Eigen::Index k = 0; k < probe.size(); ++k) probe(k) = cplx(std::cos(0.7 * k), std::sin(1.3 * k));
    Vec lhs = v * (w.cwiseProduct(s.v_inv * probe));
    Vec rhs = m * probe;
    if (!((lhs - rhs).norm() < 1e-8 * std::max(1.0, rhs.norm()))) return std::nullopt;
    return s;
}

enum class PropagationMethod { automatic, spectral, stepping };

inline const char* to_string(PropagationMethod m) {
    switch (m) {
        case PropagationMethod::spectral: return "spectral";
        case PropagationMethod::stepping: return "stepping";
        default: return "automatic";
    }
}

// exp(L t) applied on an increasing time grid with cached step matrices.
class Stepper {
public:
    explicit Stepper(const Mat& gen) : gen_(&gen) {}

    const Mat& step_matrix(double dt) {
        auto it = cache_.find(dt);
        if (it != cache_.end()) return it->second;
        Mat e = (*gen_ * dt).exp();
        return cache_.emplace(dt, std::move(e)).first->second;
    }

    // Values at sorted nonnegative times, starting from x at t=0.
    std::vector<Vec> evolve(const Vec& x, const std::vector<double>& times) {
        std::vector<Vec> out;
        out.reserve(times.size());
        Vec cur = x;
        double t = 0;
        for (double tk : times) {
            const double dt = tk - t;
            if (dt < 0) throw Error("stepping requires a nondecreasing time grid");
            if (dt > 0) cur = step_matrix(dt) * cur;
            out.push_back(cur);
            t = tk;
        }
        return out;
    }

private:
    const Mat* gen_;
    std::map<double, Mat> cache_;
};

struct PropagationResult {
    std::vector<Mat> states;
    PropagationMethod method = PropagationMethod::spectral;
};

inline PropagationResult propagate(const Liouvillian& l, const Mat& rho0, const std::vector<double>& t_grid,
                                   PropagationMethod method = PropagationMethod::automatic) {
    if (rho0.rows() != l.dim) throw DimensionMismatch("initial state dimension mismatch");
    for (std::size_t k = 1; k < t_grid.size(); ++k)
        if (!(t_grid[k] > t_grid[k - 1])) throw Error("time grid must be strictly increasing");
    if (!t_grid.empty() && t_grid.front() < 0) throw Error("time grid must be nonnegative");

    PropagationResult res;
    const Vec x = vec(rho0);
    std::optional<SpectralDecomposition> sd;
    if (method != PropagationMethod::stepping) sd = spectral_decompose(l.matrix);
    if (method == PropagationMethod::spectral && !sd)
        throw SolverError("Liouvillian eigenbasis is ill-conditioned");

    auto clean = [](const Vec& v) {
        Mat r = unvec(v);
        return Mat(0.5 * (r + r.adjoint()));
    };
    if (sd) {
        res.method = PropagationMethod::spectral;
        Vec c = sd->coefficients(x);
        for (double t : t_grid) {
            if (t == 0) {
                res.states.push_back(rho0);
                continue;
            }
            Vec e = c;
            for (Eigen::Index k = 0; k < e.size(); ++k) e(k) *= std::exp(sd->lambda(k) * t);
            res.states.push_back(clean(sd->v * e));
        }
    } else {
        res.method = PropagationMethod::stepping;
        Stepper st(l.matrix);
        auto vs = st.evolve(x, t_grid);
        for (std::size_t k = 0; k < vs.size(); ++k)
            res.states.push_back(t_grid[k] == 0 ? rho0 : clean(vs[k]));
    }
    return res;
}

// Slowest nonzero decay rate, min |Re lambda| over eigenvalues away from zero.
inline double slowest_rate(const SpectralDecomposition& sd, double zero_tol = 1e-8) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < sd.lambda.size(); ++k) {
        const double re = -sd.lambda(k).real();
        if (std::abs(sd.lambda(k)) > zero_tol) best = std::min(best, re);
    }
    return best;
}

}  // namespace mpjc
