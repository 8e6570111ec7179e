#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpjc {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Aliases that name the role of a dense object.
using OperatorMatrix = Mat;
using DensityMatrix = Mat;
using StateVector = Vec;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I{0.0, 1.0};

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidTruncation : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct AmbiguityError : Error { using Error::Error; };
struct SolverError : Error { using Error::Error; };
struct NormalizationError : Error { using Error::Error; };
struct SingularParameter : Error { using Error::Error; };
struct DtTooLarge : Error { using Error::Error; };
struct EmptyEstimate : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };

// Carries every violated field so callers can report all of them at once.
struct ValidationError : Error {
    std::vector<std::string> violations;

    explicit ValidationError(std::vector<std::string> v)
        : Error(join(v)), violations(std::move(v)) {}

    static std::string join(const std::vector<std::string>& v) {
        std::ostringstream os;
        os << "invalid configuration";
        for (const auto& s : v) os << "\n  - " << s;
        return os.str();
    }
};

// ---------------------------------------------------------------------------
// Physical parameters. Rates are raw rad/time; the CLI works with kappa = 1.

struct SystemParams {
    double g = 200.0;
    double kappa = 1.0;
    double gamma = 2.0;
    double eps_d = 0.0;
    double delta_omega_d = 0.0;
    int n_max = 14;
    bool impedance_matched = false;

    int cavity_dim() const { return n_max + 1; }
    int dim() const { return 2 * (n_max + 1); }

    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        auto finite = [&](const char* name, double x) {
            if (!std::isfinite(x)) v.push_back(std::string(name) + ": must be finite");
        };
        finite("g", g);
        finite("kappa", kappa);
        finite("gamma", gamma);
        finite("eps_d", eps_d);
        finite("delta_omega_d", delta_omega_d);
        if (g < 0) v.push_back("g: must be >= 0");
        if (kappa < 0) v.push_back("kappa: must be >= 0");
        if (gamma < 0) v.push_back("gamma: must be >= 0");
        if (eps_d < 0) v.push_back("eps_d: must be >= 0");
        if (n_max < 1) v.push_back("n_max: must be >= 1");
        if (impedance_matched && gamma != 2.0 * kappa)
            v.push_back("gamma: impedance_matched requires gamma == 2*kappa");
        return v;
    }

    void validate() const {
        auto v = violations();
        if (v.empty()) return;
        if (n_max < 1 && v.size() == 1) throw InvalidTruncation("n_max must be >= 1");
        throw ValidationError(std::move(v));
    }
};

// Atom basis: index 0 is |->, index 1 is |+>. Composite index = s*(n_max+1) + n.
enum class Atom { ground = 0, excited = 1 };

inline int basis_index(int n, Atom s, int n_max) {
    if (n < 0 || n > n_max) throw IndexError("photon number out of range");
    return static_cast<int>(s) * (n_max + 1) + n;
}

inline int n_max_from_dim(Eigen::Index dim) {
    if (dim < 4 || dim % 2 != 0) throw DimensionMismatch("dimension is not 2*(n_max+1)");
    return static_cast<int>(dim / 2) - 1;
}

}  // namespace mpjc
