#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "modes.hpp"
#include "trap_config.hpp"

namespace ionchain {

/// Occupation of every collective mode, in ModeSpectrum order.
struct PhononState {
    std::vector<std::size_t> occupations;

    /// |00...n>: n phonons in the lowest-lying mode, all others in vacuum.
    static PhononState ll_excited(std::size_t n_modes, std::size_t n) {
        PhononState s{std::vector<std::size_t>(n_modes, 0)};
        if (n_modes > 0) s.occupations.back() = n;
        return s;
    }
};

enum class Phase { condensed, conducting, critical };

inline std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::condensed: return "condensed";
        case Phase::conducting: return "conducting";
        case Phase::critical: return "critical";
    }
    return "unknown";
}

struct PhononObservables {
    std::vector<double> mean;
    /// delta n_j = sqrt(<n_j^2> - <n_j>^2). Named after the usual
    /// phonon-statistics convention; it is the root of the number variance.
    std::vector<double> variance;
    Eigen::MatrixXd correlation;
    Phase phase = Phase::critical;
};

inline constexpr double kCriticalBand = 1e-6;

inline Phase classify_phase(const TrapConfig& config) {
    const double mu = effective_mass_ratio(config);
    if (mu > 1.0 + kCriticalBand) return Phase::condensed;
    if (mu < 1.0 - kCriticalBand) return Phase::conducting;
    return Phase::critical;
}

/// Local number operator of one ion written in the collective-mode
/// quadratures q_k = (a_k + a_k^+)/sqrt2, p_k = i(a_k^+ - a_k)/sqrt2:
///
///     n_j = a^+ G a + (a H a + a^+ H a^+)/2 + tr(G)/2 - 1/2
///
/// with G = A + D and H = A - D, where A and D are the coefficient matrices
/// of q q and p p. The impurity uses its own single-ion frequency
/// omega_x0/mu as the reference, which together with the sqrt(mu) factors of
/// its position and momentum scales A by 1/mu and D by mu.
struct LocalNumberForm {
    Eigen::MatrixXd g;
    Eigen::MatrixXd h;
};

inline LocalNumberForm local_number_form(const ModeSpectrum& spectrum, const TrapConfig& config, Eigen::Index site) {
    const Eigen::Index n = spectrum.size();
    const bool impurity = static_cast<std::size_t>(site) == config.impurity_index();
    const double cx = impurity ? 1.0 / config.mass_ratio : 1.0;
    const double cp = impurity ? config.mass_ratio : 1.0;

    LocalNumberForm f{Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < n; ++l) {
            const double bb = spectrum.vectors(site, k) * spectrum.vectors(site, l);
            const double w = std::sqrt(spectrum.freqs[k] * spectrum.freqs[l]);
            const double a = 0.5 * cx * bb / w;
            const double d = 0.5 * cp * bb * w;
            f.g(k, l) = a + d;
            f.h(k, l) = a - d;
        }
    }
    return f;
}

namespace detail {

inline void check_state(const ModeSpectrum& spectrum, const TrapConfig& config, const PhononState& state) {
    if (spectrum.size() != static_cast<Eigen::Index>(config.n_ions))
        throw std::invalid_argument("spectrum size does not match n_ions");
    if (state.occupations.size() != config.n_ions)
        throw std::invalid_argument("phonon state size does not match n_ions");
}

inline std::vector<LocalNumberForm> all_forms(const ModeSpectrum& spectrum, const TrapConfig& config) {
    std::vector<LocalNumberForm> forms;
    forms.reserve(config.n_ions);
    for (Eigen::Index j = 0; j < spectrum.size(); ++j) forms.push_back(local_number_form(spectrum, config, j));
    return forms;
}

inline double form_mean(const LocalNumberForm& f, const std::vector<double>& m) {
    double v = 0.5 * f.g.trace() - 0.5;
    for (Eigen::Index k = 0; k < f.g.rows(); ++k) v += f.g(k, k) * m[static_cast<std::size_t>(k)];
    return v;
}

// Covariance of two quadratic forms in a product of Fock states. Only the
// contractions that conserve every mode's occupation survive:
//   a_k^+ a_l  with a_l^+ a_k        (k != l)
//   a_k a_l    with a_k^+ a_l^+      (any k, l)
//   a_k^+ a_l^+ with a_k a_l          (any k, l)
inline double form_covariance(const LocalNumberForm& f1, const LocalNumberForm& f2, const std::vector<double>& m) {
    const Eigen::Index n = f1.g.rows();
    double c = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double mk = m[static_cast<std::size_t>(k)];
        for (Eigen::Index l = 0; l < n; ++l) {
            const double ml = m[static_cast<std::size_t>(l)];
            if (k == l) {
                c += 0.5 * f1.h(k, k) * f2.h(k, k) * (mk * mk + mk + 1.0);
            } else {
                const double w = 2.0 * mk * ml + mk + ml;
                c += 0.5 * f1.g(k, l) * f2.g(k, l) * w;
                c += 0.5 * f1.h(k, l) * f2.h(k, l) * (w + 1.0);
            }
        }
    }
    return c;
}

inline std::vector<double> as_real(const PhononState& state) {
    return {state.occupations.begin(), state.occupations.end()};
}

}  // namespace detail

inline std::vector<double> mean_occupation(const ModeSpectrum& spectrum, const TrapConfig& config,
                                           const PhononState& state) {
    detail::check_state(spectrum, config, state);
    const std::vector<double> m = detail::as_real(state);
    std::vector<double> out(config.n_ions);
    for (Eigen::Index j = 0; j < spectrum.size(); ++j)
        out[static_cast<std::size_t>(j)] = detail::form_mean(local_number_form(spectrum, config, j), m);
    return out;
}

inline std::vector<double> mean_occupation(const ModeSpectrum& spectrum, const TrapConfig& config) {
    return mean_occupation(spectrum, config, PhononState::ll_excited(config.n_ions, config.ll_phonons));
}

inline Eigen::MatrixXd correlation(const ModeSpectrum& spectrum, const TrapConfig& config, const PhononState& state) {
    detail::check_state(spectrum, config, state);
    const std::vector<double> m = detail::as_real(state);
    const auto forms = detail::all_forms(spectrum, config);
    const Eigen::Index n = spectrum.size();
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            c(i, j) = detail::form_covariance(forms[static_cast<std::size_t>(i)], forms[static_cast<std::size_t>(j)], m);

    const double asym = (c - c.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) throw ConsistencyError("correlation matrix asymmetric by " + std::to_string(asym));
    return c;
}

inline Eigen::MatrixXd correlation(const ModeSpectrum& spectrum, const TrapConfig& config) {
    return correlation(spectrum, config, PhononState::ll_excited(config.n_ions, config.ll_phonons));
}

namespace detail {

inline std::vector<double> spread_from_diagonal(const Eigen::MatrixXd& c) {
    std::vector<double> out(static_cast<std::size_t>(c.rows()));
    for (Eigen::Index j = 0; j < c.rows(); ++j) {
        const double v = c(j, j);
        if (v < -1e-10) throw ConsistencyError("negative number variance " + std::to_string(v));
        out[static_cast<std::size_t>(j)] = std::sqrt(std::max(v, 0.0));
    }
    return out;
}

}  // namespace detail

/// Per-site delta n_j for the given state.
inline std::vector<double> variance(const ModeSpectrum& spectrum, const TrapConfig& config, const PhononState& state) {
    detail::check_state(spectrum, config, state);
    const std::vector<double> m = detail::as_real(state);
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(spectrum.size(), spectrum.size());
    for (Eigen::Index j = 0; j < spectrum.size(); ++j) {
        const LocalNumberForm f = local_number_form(spectrum, config, j);
        diag(j, j) = detail::form_covariance(f, f, m);
    }
    return detail::spread_from_diagonal(diag);
}

inline std::vector<double> variance(const ModeSpectrum& spectrum, const TrapConfig& config) {
    return variance(spectrum, config, PhononState::ll_excited(config.n_ions, config.ll_phonons));
}

inline PhononObservables observables(const ModeSpectrum& spectrum, const TrapConfig& config, const PhononState& state) {
    PhononObservables obs;
    obs.mean = mean_occupation(spectrum, config, state);
    obs.correlation = correlation(spectrum, config, state);
    obs.variance = detail::spread_from_diagonal(obs.correlation);
    obs.phase = classify_phase(config);
    return obs;
}

inline PhononObservables observables(const ModeSpectrum& spectrum, const TrapConfig& config) {
    return observables(spectrum, config, PhononState::ll_excited(config.n_ions, config.ll_phonons));
}

}  // namespace ionchain
