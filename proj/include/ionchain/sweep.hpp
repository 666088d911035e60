#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "equilibrium.hpp"
#include "errors.hpp"
#include "modes.hpp"
#include "phonons.hpp"
#include "trap_config.hpp"

namespace ionchain {

enum class SweepLaw {
    sqrt_time,  ///< omega_s = omega_s0 * sqrt(t): the impurity stiffness grows linearly in t
    linear,     ///< omega_s = omega_s0 * t
    constant,   ///< omega_s = omega_s0
};

inline std::string_view to_string(SweepLaw law) {
    switch (law) {
        case SweepLaw::sqrt_time: return "sqrt";
        case SweepLaw::linear: return "linear";
        case SweepLaw::constant: return "constant";
    }
    return "unknown";
}

inline SweepLaw sweep_law_from_string(std::string_view s) {
    if (s == "sqrt") return SweepLaw::sqrt_time;
    if (s == "linear") return SweepLaw::linear;
    if (s == "constant") return SweepLaw::constant;
    throw std::invalid_argument("unknown sweep law '" + std::string(s) + "' (expected sqrt, linear or constant)");
}

/// Time dependence of the dipole-force frequency. Times are in units of
/// 1/omega_x0 and frequencies in units of omega_x0.
struct SweepSchedule {
    double omega_s0 = 0.0;
    double duration = 1.0;
    std::size_t steps = 2;
    SweepLaw law = SweepLaw::sqrt_time;

    void validate() const {
        if (!(omega_s0 > 0.0) || !std::isfinite(omega_s0)) throw std::invalid_argument("omega_s0 must be positive");
        if (!(duration > 0.0) || !std::isfinite(duration)) throw std::invalid_argument("duration must be positive");
        if (steps < 2) throw std::invalid_argument("steps must be >= 2");
    }

    double omega_s(double t) const {
        switch (law) {
            case SweepLaw::sqrt_time: return omega_s0 * std::sqrt(std::max(t, 0.0));
            case SweepLaw::linear: return omega_s0 * t;
            case SweepLaw::constant: return omega_s0;
        }
        return omega_s0;
    }

    /// d(omega_s^2)/dt, the rate at which the impurity's diagonal entry moves.
    double stiffness_rate(double t) const {
        switch (law) {
            case SweepLaw::sqrt_time: return omega_s0 * omega_s0;
            case SweepLaw::linear: return 2.0 * omega_s0 * omega_s0 * t;
            case SweepLaw::constant: return 0.0;
        }
        return 0.0;
    }

    double time_step() const { return duration / static_cast<double>(steps - 1); }

    double time(std::size_t i) const {
        return i + 1 == steps ? duration : duration * static_cast<double>(i) / static_cast<double>(steps - 1);
    }

    /// Square-root schedule reaching `omega_s_max` at t = duration.
    static SweepSchedule sqrt_to(double omega_s_max, double duration, std::size_t steps) {
        return SweepSchedule{omega_s_max / std::sqrt(duration), duration, steps, SweepLaw::sqrt_time};
    }
};

/// Conversion of the 60 us sweep quoted for a 43Ca+ impurity in a 40Ca+
/// chain at alpha = 0.1, where mu_eff = 1 is reached at omega_s = 2pi x 0.4 MHz.
struct TimeConversion {
    double omega_x0_rad_per_s;
    double seconds;
    double dimensionless;  ///< seconds * omega_x0
};

inline TimeConversion reference_sweep_time() {
    constexpr double mu = 43.0 / 40.0;
    constexpr double dipole_rad_per_s = 2.0 * std::numbers::pi * 0.4e6;
    constexpr double seconds = 60e-6;
    const double beta_c = std::sqrt(1.0 - 1.0 / (mu * mu));
    const double omega_x0 = dipole_rad_per_s / beta_c;
    return {omega_x0, seconds, seconds * omega_x0};
}

struct SweepOptions {
    /// Sub-grid step for the eigenvector derivative, as a fraction of the
    /// time-grid spacing.
    double derivative_step_fraction = 1e-3;
    double min_overlap = 0.5;
    double adiabatic_threshold = 0.1;
};

struct SweepResult {
    std::vector<double> times;
    std::vector<double> omega_s;
    std::vector<ModeSpectrum> spectra;          ///< continuity-aligned
    std::vector<Eigen::MatrixXd> vector_rates;  ///< db_j^k/dt, same column order as spectra
    std::vector<double> mu_eff;
    std::vector<Eigen::MatrixXd> s_coupling;  ///< S_kq = sum_j b_j^k db_j^q/dt (signed)
    std::vector<Eigen::MatrixXd> r_coupling;  ///< R_kq = sum_j db_j^k/dt db_j^q/dt (signed)
    std::vector<double> adiabatic_margin;
    std::optional<double> transition_omega_s;
};

namespace detail {

inline constexpr double kTinyCoupling = 1e-300;

/// Reorders and sign-flips `next` so that each column continues the
/// corresponding column of `reference`. Greedy matching on |overlap|.
/// Returns the smallest matched |overlap|.
inline double align_to(const Eigen::MatrixXd& reference, ModeSpectrum& next) {
    const Eigen::Index n = reference.cols();
    const Eigen::MatrixXd overlap = reference.transpose() * next.vectors;
    std::vector<bool> used_ref(static_cast<std::size_t>(n), false), used_next(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> source(static_cast<std::size_t>(n), -1);
    std::vector<double> sign(static_cast<std::size_t>(n), 1.0);
    double worst = std::numeric_limits<double>::infinity();

    for (Eigen::Index round = 0; round < n; ++round) {
        double best = -1.0;
        Eigen::Index br = -1, bc = -1;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (used_ref[static_cast<std::size_t>(r)]) continue;
            for (Eigen::Index c = 0; c < n; ++c) {
                if (used_next[static_cast<std::size_t>(c)]) continue;
                if (std::abs(overlap(r, c)) > best) {
                    best = std::abs(overlap(r, c));
                    br = r;
                    bc = c;
                }
            }
        }
        used_ref[static_cast<std::size_t>(br)] = true;
        used_next[static_cast<std::size_t>(bc)] = true;
        source[static_cast<std::size_t>(br)] = bc;
        sign[static_cast<std::size_t>(br)] = overlap(br, bc) < 0.0 ? -1.0 : 1.0;
        worst = std::min(worst, best);
    }

    ModeSpectrum aligned = next;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = source[static_cast<std::size_t>(k)];
        aligned.lambdas[k] = next.lambdas[src];
        aligned.freqs[k] = next.freqs[src];
        aligned.vectors.col(k) = sign[static_cast<std::size_t>(k)] * next.vectors.col(src);
    }
    next = std::move(aligned);
    return worst;
}

inline ModeSpectrum spectrum_at(const TrapConfig& base, const EquilibriumPositions& positions, double omega_s) {
    TrapConfig c = base;
    c.dipole_beta = omega_s;
    return compute_spectrum(c, positions);
}

inline double min_gap(const Eigen::VectorXd& freqs) {
    double g = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < freqs.size(); ++k)
        for (Eigen::Index q = k + 1; q < freqs.size(); ++q) g = std::min(g, std::abs(freqs[k] - freqs[q]));
    return g;
}

}  // namespace detail

/// Dipole frequency at which mu_eff(mu, omega_s) = 1, searched by bisection
/// inside [lo, hi]. Empty when mu_eff - 1 does not change sign there.
inline std::optional<double> find_transition(double mu, double lo, double hi) {
    auto f = [mu](double b) { return effective_mass_ratio(mu, b) - 1.0; };
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) return std::nullopt;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Tracks the transverse spectrum along the dipole-force schedule. The
/// config's dipole_beta is replaced by omega_s(t) at every time.
inline SweepResult run_sweep(const TrapConfig& config, const SweepSchedule& schedule,
                             const EquilibriumPositions& positions, const SweepOptions& options = {}) {
    config.validate();
    schedule.validate();
    if (!(config.mass_ratio > 1.0))
        throw std::invalid_argument("run_sweep: the dipole force only lowers the mass ratio; start from mass_ratio > 1");

    const std::size_t steps = schedule.steps;
    const double dt = schedule.time_step();
    const double h = options.derivative_step_fraction * dt;

    SweepResult r;
    r.times.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = schedule.time(i);
        const double ws = schedule.omega_s(t);
        ModeSpectrum s = detail::spectrum_at(config, positions, ws);
        if (!r.spectra.empty()) {
            const double ov = detail::align_to(r.spectra.back().vectors, s);
            if (ov < options.min_overlap) throw AlignmentError(i, ov);
        }

        // neighbours at t +- h, aligned to the frame at t
        auto aligned_at = [&](double tt) {
            ModeSpectrum n = detail::spectrum_at(config, positions, schedule.omega_s(tt));
            detail::align_to(s.vectors, n);
            return n.vectors;
        };
        Eigen::MatrixXd rate;
        if (i == 0) {
            rate = (4.0 * (aligned_at(t + h) - s.vectors) - (aligned_at(t + 2.0 * h) - s.vectors)) / (2.0 * h);
        } else if (i + 1 == steps) {
            rate = ((aligned_at(t - 2.0 * h) - s.vectors) - 4.0 * (aligned_at(t - h) - s.vectors)) / (2.0 * h);
        } else {
            rate = (aligned_at(t + h) - aligned_at(t - h)) / (2.0 * h);
        }

        Eigen::MatrixXd sc = s.vectors.transpose() * rate;
        Eigen::MatrixXd rc = rate.transpose() * rate;
        const double smax = sc.cwiseAbs().maxCoeff();

        r.times.push_back(t);
        r.omega_s.push_back(ws);
        r.mu_eff.push_back(effective_mass_ratio(config.mass_ratio, ws));
        r.adiabatic_margin.push_back(detail::min_gap(s.freqs) / std::max(smax, detail::kTinyCoupling));
        r.spectra.push_back(std::move(s));
        r.vector_rates.push_back(std::move(rate));
        r.s_coupling.push_back(std::move(sc));
        r.r_coupling.push_back(std::move(rc));
    }

    for (std::size_t i = 1; i < steps && !r.transition_omega_s; ++i)
        if (r.mu_eff[i - 1] > 1.0 && r.mu_eff[i] <= 1.0)
            r.transition_omega_s = find_transition(config.mass_ratio, r.omega_s[i - 1], r.omega_s[i]);
    return r;
}

inline SweepResult run_sweep(const TrapConfig& config, const SweepSchedule& schedule, const SweepOptions& options = {}) {
    return run_sweep(config, schedule, solve_equilibrium(config.n_ions), options);
}

struct AdiabaticReport {
    double worst_ratio = 0.0;  ///< max over t and k != q of |S_kq| / |omega_k - omega_q|
    double worst_time = 0.0;
    Eigen::Index worst_k = 0;
    Eigen::Index worst_q = 0;
    double min_gap = 0.0;  ///< smallest |omega_k - omega_q| over the sweep
    /// Level-crossing estimate: rate of the impurity stiffness, i.e.
    /// d(omega_s^2)/dt in omega_x0^3 (omega_s0^2 for the sqrt law), against
    /// min_gap^2 * T. Holds when lhs <= rhs.
    double crossing_lhs = 0.0;
    double crossing_rhs = 0.0;
    bool crossing_estimate_holds = false;
    double threshold = 0.1;
    bool passed = false;
};

inline AdiabaticReport adiabatic_check(const SweepResult& result, const SweepSchedule& schedule,
                                       double threshold = SweepOptions{}.adiabatic_threshold) {
    AdiabaticReport rep;
    rep.threshold = threshold;
    rep.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < result.times.size(); ++i) {
        const Eigen::VectorXd& w = result.spectra[i].freqs;
        const Eigen::MatrixXd& s = result.s_coupling[i];
        rep.min_gap = std::min(rep.min_gap, detail::min_gap(w));
        for (Eigen::Index k = 0; k < w.size(); ++k) {
            for (Eigen::Index q = 0; q < w.size(); ++q) {
                if (k == q) continue;
                const double gap = std::abs(w[k] - w[q]);
                const double ratio = std::abs(s(k, q)) == 0.0 ? 0.0 : std::abs(s(k, q)) / gap;
                if (ratio > rep.worst_ratio) {
                    rep.worst_ratio = ratio;
                    rep.worst_time = result.times[i];
                    rep.worst_k = k;
                    rep.worst_q = q;
                }
            }
        }
        rep.crossing_lhs = std::max(rep.crossing_lhs, std::abs(schedule.stiffness_rate(result.times[i])));
    }
    rep.crossing_rhs = rep.min_gap * rep.min_gap * schedule.duration;
    rep.crossing_estimate_holds = rep.crossing_lhs <= rep.crossing_rhs;
    rep.passed = rep.worst_ratio <= threshold;
    return rep;
}

struct SweepObservables {
    std::vector<double> times;
    std::vector<double> omega_s;
    std::vector<PhononObservables> observables;
    AdiabaticReport adiabatic;
    std::string warning;  ///< non-empty when adiabatic following is not guaranteed
};

/// Local-phonon observables along the sweep, assuming the collective state
/// |00...n> follows the instantaneous modes (sorted spectrum at every time).
inline SweepObservables observables_along_sweep(const TrapConfig& config, const SweepSchedule& schedule,
                                                const SweepOptions& options = {}) {
    const EquilibriumPositions positions = solve_equilibrium(config.n_ions);
    const SweepResult sweep = run_sweep(config, schedule, positions, options);

    SweepObservables out;
    out.adiabatic = adiabatic_check(sweep, schedule, options.adiabatic_threshold);
    if (!out.adiabatic.passed)
        out.warning = "adiabatic condition violated: max |S_kq|/|w_k - w_q| = " +
                      std::to_string(out.adiabatic.worst_ratio) + " > " + std::to_string(out.adiabatic.threshold);
    out.times = sweep.times;
    out.omega_s = sweep.omega_s;
    out.observables.reserve(sweep.times.size());
    for (double ws : sweep.omega_s) {
        TrapConfig c = config;
        c.dipole_beta = ws;
        out.observables.push_back(observables(compute_spectrum(c, positions), c));
    }
    return out;
}

}  // namespace ionchain
