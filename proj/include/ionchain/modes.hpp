#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "equilibrium.hpp"
#include "errors.hpp"
#include "trap_config.hpp"

namespace ionchain {

/// Mass-weighted transverse stiffness matrix in units of m*omega_x0^2.
/// The impurity row and column are scaled by 1/sqrt(mu); the impurity
/// diagonal is divided by mu^2 overall and carries beta^2 from the dipole
/// potential.
struct ModeMatrix {
    Eigen::MatrixXd b;

    Eigen::Index size() const noexcept { return b.rows(); }
};

/// Eigen-decomposition of a ModeMatrix, ordered by descending eigenvalue.
/// Column k of `vectors` is the mode vector b^k; index 0 is the COM mode and
/// index N-1 the lowest-lying (LL) mode.
struct ModeSpectrum {
    Eigen::VectorXd lambdas;
    Eigen::VectorXd freqs;  ///< omega_k / omega_x0 = sqrt(lambda_k)
    Eigen::MatrixXd vectors;

    Eigen::Index size() const noexcept { return lambdas.size(); }
    Eigen::Index com_index() const noexcept { return 0; }
    Eigen::Index ll_index() const noexcept { return lambdas.size() - 1; }
};

/// Sum over p != j of |u_j - u_p|^-3.
inline double coulomb_sum(const EquilibriumPositions& positions, std::size_t j) {
    double s = 0.0;
    for (std::size_t p = 0; p < positions.size(); ++p)
        if (p != j) s += 1.0 / std::pow(std::abs(positions[j] - positions[p]), 3);
    return s;
}

inline ModeMatrix build_matrix(const TrapConfig& config, const EquilibriumPositions& positions) {
    config.validate();
    if (positions.size() != config.n_ions)
        throw std::invalid_argument("build_matrix: positions solved for " + std::to_string(positions.size()) +
                                    " ions, config has " + std::to_string(config.n_ions));

    const std::size_t n = config.n_ions;
    const std::size_t jm = config.impurity_index();
    const double a2 = config.alpha * config.alpha;
    const double mu = config.mass_ratio;
    const double inv_sqrt_mu = 1.0 / std::sqrt(mu);

    Eigen::MatrixXd b(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = a2 / std::pow(std::abs(positions[i] - positions[j]), 3);
            if (i == jm || j == jm) v *= inv_sqrt_mu;
            b(i, j) = v;
            b(j, i) = v;
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double s = coulomb_sum(positions, j);
        if (j == jm) {
            b(j, j) = 1.0 / (mu * mu) - a2 / (2.0 * mu) - (a2 / mu) * s + config.dipole_beta * config.dipole_beta;
        } else {
            b(j, j) = 1.0 - 0.5 * a2 - a2 * s;
        }
    }
    return ModeMatrix{std::move(b)};
}

/// Flips each column so that its entry of largest magnitude is positive.
inline void apply_sign_convention(Eigen::MatrixXd& vectors) {
    for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
        Eigen::Index imax = 0;
        vectors.col(k).cwiseAbs().maxCoeff(&imax);
        if (vectors(imax, k) < 0.0) vectors.col(k) = -vectors.col(k);
    }
}

inline ModeSpectrum diagonalize(const ModeMatrix& matrix) {
    const Eigen::MatrixXd& b = matrix.b;
    if (b.rows() != b.cols() || b.rows() == 0) throw std::invalid_argument("diagonalize: matrix must be square");
    if (!b.allFinite()) throw std::invalid_argument("diagonalize: non-finite matrix entry");
    if (b != b.transpose()) throw std::invalid_argument("diagonalize: matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
    if (solver.info() != Eigen::Success) throw NumericalError("diagonalize: eigensolver failed");

    const Eigen::Index n = b.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Eigen::VectorXd& ev = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return ev[x] > ev[y]; });

    ModeSpectrum s;
    s.lambdas.resize(n);
    s.freqs.resize(n);
    s.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        s.lambdas[k] = ev[src];
        s.vectors.col(k) = solver.eigenvectors().col(src);
    }
    if (s.lambdas[n - 1] <= 0.0) throw UnstableCrystalError(s.lambdas[n - 1]);
    s.freqs = s.lambdas.cwiseSqrt();
    apply_sign_convention(s.vectors);
    return s;
}

inline ModeSpectrum compute_spectrum(const TrapConfig& config, const EquilibriumPositions& positions) {
    return diagonalize(build_matrix(config, positions));
}

inline ModeSpectrum compute_spectrum(const TrapConfig& config) {
    return compute_spectrum(config, solve_equilibrium(config.n_ions));
}

/// Frequencies (units of omega_x0) with the off-diagonal Coulomb couplings
/// dropped: only the impurity mode departs from omega_x, sitting at
/// omega_x/mu_eff. It is the COM mode for a light impurity and the LL mode
/// for a heavy one.
inline std::vector<double> asymptotic_freqs(const TrapConfig& config) {
    config.validate();
    const double wx = config.transverse_ratio();
    const double mu = effective_mass_ratio(config);
    std::vector<double> w(config.n_ions, wx);
    if (mu < 1.0)
        w.front() = wx / mu;
    else if (mu > 1.0)
        w.back() = wx / mu;
    return w;
}

struct CuspJumps {
    double ll = 0.0;   ///< derivative jump of omega_N across mu = 1
    double com = 0.0;  ///< derivative jump of omega_1 across mu = 1
};

/// One-sided finite-difference slopes of the COM and LL frequencies on each
/// side of mu = 1; returns the absolute jump for each. mass_ratio in `family`
/// is ignored.
inline CuspJumps cusp_jumps(const TrapConfig& family, const EquilibriumPositions& positions, double du = 1e-3) {
    if (!(du > 0.0 && du < 1.0)) throw std::invalid_argument("cusp_jumps: du must lie in (0, 1)");
    auto freqs_at = [&](double mu) {
        TrapConfig c = family;
        c.mass_ratio = mu;
        return compute_spectrum(c, positions).freqs;
    };
    const Eigen::VectorXd w0 = freqs_at(1.0);
    const Eigen::VectorXd wm = freqs_at(1.0 - du);
    const Eigen::VectorXd wp = freqs_at(1.0 + du);
    auto jump = [&](Eigen::Index k) {
        const double left = (w0[k] - wm[k]) / du;
        const double right = (wp[k] - w0[k]) / du;
        return std::abs(right - left);
    };
    return CuspJumps{jump(w0.size() - 1), jump(0)};
}

inline double cusp_metric(const TrapConfig& family, const EquilibriumPositions& positions, double du = 1e-3) {
    const CuspJumps j = cusp_jumps(family, positions, du);
    return std::max(j.ll, j.com);
}

inline double cusp_metric(const TrapConfig& family, double du = 1e-3) {
    return cusp_metric(family, solve_equilibrium(family.n_ions), du);
}

}  // namespace ionchain
