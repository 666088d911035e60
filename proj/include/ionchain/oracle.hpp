#pragma once

// Brute-force reference for the local-phonon observables: every operator is
// built as an explicit matrix in a truncated Fock space of the collective
// modes and the moments are read off the basis state |00...n>.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "errors.hpp"
#include "modes.hpp"
#include "phonons.hpp"
#include "trap_config.hpp"

namespace ionchain::oracle {

using cplx = std::complex<double>;
using SparseOp = Eigen::SparseMatrix<cplx>;

inline constexpr std::size_t kMaxModes = 4;

/// Product basis with per-mode cutoff, enumerated lexicographically with
/// mode 0 as the most significant digit.
class FockBasis {
public:
    FockBasis(std::size_t n_modes, std::size_t cutoff) : n_modes_(n_modes), cutoff_(cutoff) {
        if (n_modes == 0 || cutoff == 0) throw std::invalid_argument("FockBasis: n_modes and cutoff must be positive");
        dim_ = 1;
        for (std::size_t k = 0; k < n_modes; ++k) dim_ *= cutoff + 1;
    }

    std::size_t n_modes() const noexcept { return n_modes_; }
    std::size_t cutoff() const noexcept { return cutoff_; }
    std::size_t dimension() const noexcept { return dim_; }

    std::vector<std::size_t> state(std::size_t index) const {
        std::vector<std::size_t> occ(n_modes_);
        for (std::size_t k = n_modes_; k-- > 0;) {
            occ[k] = index % (cutoff_ + 1);
            index /= cutoff_ + 1;
        }
        return occ;
    }

    std::size_t index(const std::vector<std::size_t>& occ) const {
        if (occ.size() != n_modes_) throw std::invalid_argument("FockBasis::index: wrong number of modes");
        std::size_t idx = 0;
        for (std::size_t k = 0; k < n_modes_; ++k) {
            if (occ[k] > cutoff_) throw std::out_of_range("FockBasis::index: occupation above cutoff");
            idx = idx * (cutoff_ + 1) + occ[k];
        }
        return idx;
    }

    /// True when some mode sits at the cutoff, where truncation breaks the
    /// canonical commutator.
    bool on_top_shell(std::size_t index) const {
        const auto occ = state(index);
        return std::any_of(occ.begin(), occ.end(), [&](std::size_t o) { return o == cutoff_; });
    }

private:
    std::size_t n_modes_;
    std::size_t cutoff_;
    std::size_t dim_ = 1;
};

inline SparseOp annihilation(const FockBasis& basis, std::size_t mode) {
    std::vector<Eigen::Triplet<cplx>> trips;
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
        auto occ = basis.state(i);
        if (occ[mode] == 0) continue;
        const double amp = std::sqrt(static_cast<double>(occ[mode]));
        --occ[mode];
        trips.emplace_back(static_cast<int>(basis.index(occ)), static_cast<int>(i), cplx(amp, 0.0));
    }
    const int d = static_cast<int>(basis.dimension());
    SparseOp a(d, d);
    a.setFromTriplets(trips.begin(), trips.end());
    return a;
}

/// Per-ion mass and single-ion transverse frequency in units of m and
/// omega_x0(m); the impurity has mass mu and frequency omega_x0/mu.
struct IonFrame {
    double mass;
    double ref_freq;
};

inline IonFrame ion_frame(const TrapConfig& config, std::size_t site) {
    if (site == config.impurity_index()) return {config.mass_ratio, 1.0 / config.mass_ratio};
    return {1.0, 1.0};
}

/// Collective-mode position and momentum operators, hbar = m = omega_x0 = 1.
struct ModeOperators {
    std::vector<SparseOp> x;
    std::vector<SparseOp> p;
};

inline ModeOperators mode_operators(const FockBasis& basis, const ModeSpectrum& spectrum) {
    ModeOperators ops;
    for (std::size_t k = 0; k < basis.n_modes(); ++k) {
        const SparseOp a = annihilation(basis, k);
        const SparseOp ad = SparseOp(a.adjoint());
        const double w = spectrum.freqs[static_cast<Eigen::Index>(k)];
        ops.x.push_back(SparseOp((ad + a) * cplx(1.0 / std::sqrt(2.0 * w), 0.0)));
        ops.p.push_back(SparseOp((ad - a) * cplx(0.0, std::sqrt(w / 2.0))));
    }
    return ops;
}

/// x_j = sum_k b_j^k X_k, with an extra 1/sqrt(mu) at the impurity.
inline SparseOp position_operator(const ModeOperators& ops, const ModeSpectrum& spectrum, const TrapConfig& config,
                                  std::size_t site) {
    const double scale = site == config.impurity_index() ? 1.0 / std::sqrt(config.mass_ratio) : 1.0;
    SparseOp x(ops.x.front().rows(), ops.x.front().cols());
    for (std::size_t k = 0; k < ops.x.size(); ++k)
        x += ops.x[k] * cplx(scale * spectrum.vectors(static_cast<Eigen::Index>(site), static_cast<Eigen::Index>(k)), 0.0);
    return x;
}

/// p_j = sum_k b_j^k P_k, with an extra sqrt(mu) at the impurity.
inline SparseOp momentum_operator(const ModeOperators& ops, const ModeSpectrum& spectrum, const TrapConfig& config,
                                  std::size_t site) {
    const double scale = site == config.impurity_index() ? std::sqrt(config.mass_ratio) : 1.0;
    SparseOp p(ops.p.front().rows(), ops.p.front().cols());
    for (std::size_t k = 0; k < ops.p.size(); ++k)
        p += ops.p[k] * cplx(scale * spectrum.vectors(static_cast<Eigen::Index>(site), static_cast<Eigen::Index>(k)), 0.0);
    return p;
}

/// n_j = (M w / 2) x_j^2 + p_j^2 / (2 M w) - 1/2 in the ion's own frame.
inline SparseOp local_number_operator(const ModeOperators& ops, const ModeSpectrum& spectrum, const TrapConfig& config,
                                      std::size_t site) {
    const IonFrame f = ion_frame(config, site);
    const SparseOp x = position_operator(ops, spectrum, config, site);
    const SparseOp p = momentum_operator(ops, spectrum, config, site);
    const int d = static_cast<int>(x.rows());
    SparseOp id(d, d);
    id.setIdentity();
    SparseOp n = SparseOp(x * x) * cplx(0.5 * f.mass * f.ref_freq, 0.0) +
                 SparseOp(p * p) * cplx(0.5 / (f.mass * f.ref_freq), 0.0) - id * cplx(0.5, 0.0);
    return n;
}

namespace detail {

inline void check_inputs(const TrapConfig& config, const ModeSpectrum& spectrum, std::size_t cutoff,
                         std::size_t min_extra) {
    config.validate();
    if (config.n_ions > kMaxModes)
        throw std::invalid_argument("oracle: N=" + std::to_string(config.n_ions) + " exceeds the dimension guard (N <= " +
                                    std::to_string(kMaxModes) + ")");
    if (spectrum.size() != static_cast<Eigen::Index>(config.n_ions))
        throw std::invalid_argument("oracle: spectrum size does not match n_ions");
    if (cutoff < config.ll_phonons + min_extra || cutoff == 0)
        throw std::invalid_argument("oracle: cutoff must be at least ll_phonons + " + std::to_string(min_extra));
}

inline double max_abs_difference(const PhononObservables& a, const PhononObservables& b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.mean.size(); ++j) {
        d = std::max(d, std::abs(a.mean[j] - b.mean[j]));
        d = std::max(d, std::abs(a.variance[j] - b.variance[j]));
    }
    return std::max(d, (a.correlation - b.correlation).cwiseAbs().maxCoeff());
}

}  // namespace detail

/// Observables at one fixed cutoff, without the convergence check. Any
/// cutoff that can represent the state is accepted; below ll_phonons + 2 the
/// truncation visibly biases the second moments.
inline PhononObservables observables_at_cutoff(const TrapConfig& config, const ModeSpectrum& spectrum, std::size_t cutoff) {
    detail::check_inputs(config, spectrum, cutoff, 0);
    const std::size_t n = config.n_ions;
    const FockBasis basis(n, cutoff);
    const ModeOperators ops = mode_operators(basis, spectrum);

    std::vector<std::size_t> occ(n, 0);
    occ.back() = config.ll_phonons;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.dimension()));
    psi[static_cast<Eigen::Index>(basis.index(occ))] = 1.0;

    std::vector<Eigen::VectorXcd> applied;
    applied.reserve(n);
    PhononObservables obs;
    obs.mean.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        applied.push_back(local_number_operator(ops, spectrum, config, j) * psi);
        obs.mean[j] = psi.dot(applied.back()).real();
    }
    obs.correlation.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            obs.correlation(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                applied[i].dot(applied[j]).real() - obs.mean[i] * obs.mean[j];

    obs.variance.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double v = obs.correlation(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
        obs.variance[j] = std::sqrt(std::max(v, 0.0));
    }
    obs.phase = classify_phase(config);
    return obs;
}

inline constexpr double kConvergenceTolerance = 1e-8;

/// Exact observables in |00...n>; verified stable against cutoff + 2.
inline PhononObservables exact_observables(const TrapConfig& config, const ModeSpectrum& spectrum, std::size_t cutoff) {
    detail::check_inputs(config, spectrum, cutoff, 4);
    PhononObservables obs = observables_at_cutoff(config, spectrum, cutoff);
    const PhononObservables finer = observables_at_cutoff(config, spectrum, cutoff + 2);
    const double delta = detail::max_abs_difference(obs, finer);
    if (delta > kConvergenceTolerance)
        throw ConvergenceError("oracle: observables not converged at cutoff " + std::to_string(cutoff) +
                                   "; increase the cutoff",
                               delta);
    return obs;
}

inline PhononObservables exact_observables(const TrapConfig& config, std::size_t cutoff) {
    return exact_observables(config, compute_spectrum(config), cutoff);
}

struct ConvergenceRow {
    std::size_t cutoff;
    PhononObservables observables;
    double delta;  ///< max change against the previous row; NaN for the first
};

inline std::vector<ConvergenceRow> convergence_scan(const TrapConfig& config, const std::vector<std::size_t>& cutoffs) {
    const ModeSpectrum spectrum = compute_spectrum(config);
    std::vector<ConvergenceRow> rows;
    for (std::size_t c : cutoffs) {
        PhononObservables obs = observables_at_cutoff(config, spectrum, c);
        const double delta = rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : detail::max_abs_difference(rows.back().observables, obs);
        rows.push_back({c, std::move(obs), delta});
    }
    return rows;
}

}  // namespace ionchain::oracle
