#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace ionchain {

/// Dimensionless description of an impurity-doped linear crystal.
///
/// Frequencies are in units of the transverse single-ion frequency of the
/// host species, so only ratios enter: the mass ratio M/m, the anisotropy
/// omega_z/omega_x0 and the dipole-force frequency omega_s/omega_x0.
struct TrapConfig {
    std::size_t n_ions = 2;
    std::size_t impurity_site = 1;  ///< 1-based position of the impurity in the chain
    double mass_ratio = 1.0;
    double alpha = 0.1;
    double dipole_beta = 0.0;
    std::size_t ll_phonons = 0;  ///< phonons prepared in the lowest-lying mode

    /// 0-based impurity index.
    std::size_t impurity_index() const noexcept { return impurity_site - 1; }

    /// omega_x / omega_x0 = sqrt(1 - alpha^2/2), the transverse frequency
    /// lowered by the axial confinement.
    double transverse_ratio() const noexcept { return std::sqrt(1.0 - 0.5 * alpha * alpha); }

    void validate() const {
        if (n_ions < 2) throw std::invalid_argument("n_ions must be >= 2");
        if (impurity_site < 1 || impurity_site > n_ions)
            throw std::invalid_argument("impurity_site must lie in 1.." + std::to_string(n_ions));
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
        if (!(mass_ratio > 0.0) || !std::isfinite(mass_ratio))
            throw std::invalid_argument("mass_ratio must be positive");
        if (!(dipole_beta >= 0.0) || !std::isfinite(dipole_beta))
            throw std::invalid_argument("dipole_beta must be non-negative");
    }
};

/// Mass ratio seen by the transverse motion when an optical dipole potential
/// of frequency beta*omega_x0 acts on the impurity: (beta^2 + 1/mu^2)^(-1/2).
inline double effective_mass_ratio(double mu, double beta) {
    if (!(mu > 0.0)) throw std::invalid_argument("mass ratio must be positive");
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
    if (beta == 0.0) return mu;
    return 1.0 / std::sqrt(beta * beta + 1.0 / (mu * mu));
}

inline double effective_mass_ratio(const TrapConfig& config) {
    return effective_mass_ratio(config.mass_ratio, config.dipole_beta);
}

}  // namespace ionchain
