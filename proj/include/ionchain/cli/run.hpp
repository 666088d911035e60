#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "../equilibrium.hpp"
#include "../errors.hpp"
#include "../modes.hpp"
#include "../oracle.hpp"
#include "../phonons.hpp"
#include "../sweep.hpp"
#include "../trap_config.hpp"
#include "parallel.hpp"
#include "table.hpp"

namespace ionchain::cli {

inline constexpr const char* kToolName = "ionchain";
inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kSuccess = 0, kUsageError = 2, kNumericalFailure = 3, kAdiabaticFailure = 4 };

struct ScanSpec {
    std::string parameter;  ///< mass_ratio, alpha or dipole_beta
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;

    void validate() const {
        if (parameter != "mass_ratio" && parameter != "alpha" && parameter != "dipole_beta")
            throw std::invalid_argument("scan parameter must be one of mass_ratio, alpha, dipole_beta (got '" +
                                        parameter + "')");
        if (count < 1) throw std::invalid_argument("scan count must be >= 1");
        if (!(max >= min)) throw std::invalid_argument("scan max must be >= min");
    }

    double value(std::size_t i) const {
        if (count == 1) return min;
        return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
    }

    /// Column header used for the scanned parameter.
    std::string column() const {
        if (parameter == "mass_ratio") return "mu";
        if (parameter == "dipole_beta") return "beta";
        return parameter;
    }

    void apply(TrapConfig& c, double v) const {
        if (parameter == "mass_ratio")
            c.mass_ratio = v;
        else if (parameter == "alpha")
            c.alpha = v;
        else
            c.dipole_beta = v;
    }
};

struct ScheduleSettings {
    double omega_s_max = 0.8;
    double duration = reference_sweep_time().dimensionless;
    std::size_t steps = 2001;
    std::string law = "sqrt";

    SweepSchedule schedule() const {
        const SweepLaw l = sweep_law_from_string(law);
        SweepSchedule s;
        s.duration = duration;
        s.steps = steps;
        s.law = l;
        switch (l) {
            case SweepLaw::sqrt_time: s.omega_s0 = omega_s_max / std::sqrt(duration); break;
            case SweepLaw::linear: s.omega_s0 = omega_s_max / duration; break;
            case SweepLaw::constant: s.omega_s0 = omega_s_max; break;
        }
        return s;
    }
};

struct RunConfig {
    std::string command;
    TrapConfig trap{6, 2, 43.0 / 40.0, 0.1, 0.0, 2};
    ScheduleSettings schedule;
    std::optional<ScanSpec> scan;
    std::size_t cutoff = 0;  ///< oracle-check; 0 selects ll_phonons + 4
    bool strict = false;
    std::string output;  ///< empty: stdout
    std::string format = "csv";
};

inline nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["command"] = c.command;
    j["trap"] = {{"n_ions", c.trap.n_ions},           {"impurity_site", c.trap.impurity_site},
                 {"mass_ratio", c.trap.mass_ratio},   {"alpha", c.trap.alpha},
                 {"dipole_beta", c.trap.dipole_beta}, {"ll_phonons", c.trap.ll_phonons}};
    j["schedule"] = {{"omega_s_max", c.schedule.omega_s_max},
                     {"duration", c.schedule.duration},
                     {"steps", c.schedule.steps},
                     {"law", c.schedule.law}};
    if (c.scan)
        j["scan"] = {{"parameter", c.scan->parameter}, {"min", c.scan->min}, {"max", c.scan->max}, {"count", c.scan->count}};
    else
        j["scan"] = nullptr;
    j["cutoff"] = c.cutoff;
    j["strict"] = c.strict;
    j["output"] = {{"path", c.output}, {"format", c.format}};
    return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.command = j.at("command").get<std::string>();
    const auto& t = j.at("trap");
    c.trap.n_ions = t.at("n_ions").get<std::size_t>();
    c.trap.impurity_site = t.at("impurity_site").get<std::size_t>();
    c.trap.mass_ratio = t.at("mass_ratio").get<double>();
    c.trap.alpha = t.at("alpha").get<double>();
    c.trap.dipole_beta = t.at("dipole_beta").get<double>();
    c.trap.ll_phonons = t.at("ll_phonons").get<std::size_t>();
    const auto& s = j.at("schedule");
    c.schedule.omega_s_max = s.at("omega_s_max").get<double>();
    c.schedule.duration = s.at("duration").get<double>();
    c.schedule.steps = s.at("steps").get<std::size_t>();
    c.schedule.law = s.at("law").get<std::string>();
    if (j.contains("scan") && !j.at("scan").is_null()) {
        const auto& sc = j.at("scan");
        c.scan = ScanSpec{sc.at("parameter").get<std::string>(), sc.at("min").get<double>(), sc.at("max").get<double>(),
                          sc.at("count").get<std::size_t>()};
    }
    c.cutoff = j.value("cutoff", std::size_t{0});
    c.strict = j.value("strict", false);
    if (j.contains("output")) {
        c.output = j.at("output").value("path", std::string{});
        c.format = j.at("output").value("format", std::string{"csv"});
    }
    return c;
}

struct RunOutput {
    Table table;
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    int exit_code = kSuccess;
    std::string warning;
};

namespace detail {

inline std::string indexed(const char* prefix, std::size_t i) { return prefix + std::to_string(i + 1); }

inline std::vector<std::vector<double>> columns_of(const std::vector<Eigen::VectorXd>& rows, std::size_t n) {
    std::vector<std::vector<double>> cols(n, std::vector<double>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t k = 0; k < n; ++k) cols[k][r] = rows[r][static_cast<Eigen::Index>(k)];
    return cols;
}

inline RunOutput run_equilibrium(const RunConfig& rc) {
    const EquilibriumPositions pos = solve_equilibrium(rc.trap.n_ions);
    RunOutput out;
    std::vector<double> site(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) site[i] = static_cast<double>(i + 1);
    out.table.add("site", site);
    out.table.add("u", pos.u);
    out.summary["gradient_residual"] = gradient_residual(pos.u);
    return out;
}

inline RunOutput run_spectrum(const RunConfig& rc) {
    rc.trap.validate();
    const EquilibriumPositions pos = solve_equilibrium(rc.trap.n_ions);
    const std::size_t n = rc.trap.n_ions;
    RunOutput out;
    if (rc.scan) {
        const ScanSpec& scan = *rc.scan;
        std::vector<double> values(scan.count);
        for (std::size_t i = 0; i < scan.count; ++i) values[i] = scan.value(i);
        const auto freqs = parallel_map(scan.count, [&](std::size_t i) {
            TrapConfig c = rc.trap;
            scan.apply(c, values[i]);
            return Eigen::VectorXd(compute_spectrum(c, pos).freqs);
        });
        out.table.add(scan.column(), values);
        auto cols = columns_of(freqs, n);
        for (std::size_t k = 0; k < n; ++k) out.table.add(indexed("omega_", k), std::move(cols[k]));
        return out;
    }

    const ModeSpectrum s = compute_spectrum(rc.trap, pos);
    std::vector<double> mode(n), lambda(n), omega(n);
    for (std::size_t k = 0; k < n; ++k) {
        mode[k] = static_cast<double>(k + 1);
        lambda[k] = s.lambdas[static_cast<Eigen::Index>(k)];
        omega[k] = s.freqs[static_cast<Eigen::Index>(k)];
    }
    out.table.add("mode", mode);
    out.table.add("lambda", lambda);
    out.table.add("omega", omega);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> comp(n);
        for (std::size_t k = 0; k < n; ++k) comp[k] = s.vectors(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
        out.table.add(indexed("b_", j), std::move(comp));
    }
    const std::vector<double> asym = asymptotic_freqs(rc.trap);
    out.table.add("omega_asymptotic", asym);
    return out;
}

inline RunOutput run_observables(const RunConfig& rc) {
    rc.trap.validate();
    const EquilibriumPositions pos = solve_equilibrium(rc.trap.n_ions);
    const std::size_t n = rc.trap.n_ions;
    RunOutput out;
    if (rc.scan) {
        const ScanSpec& scan = *rc.scan;
        std::vector<double> values(scan.count);
        for (std::size_t i = 0; i < scan.count; ++i) values[i] = scan.value(i);
        const auto obs = parallel_map(scan.count, [&](std::size_t i) {
            TrapConfig c = rc.trap;
            scan.apply(c, values[i]);
            return observables(compute_spectrum(c, pos), c);
        });
        out.table.add(scan.column(), values);
        std::vector<std::string> phase;
        for (const auto& o : obs) phase.emplace_back(to_string(o.phase));
        out.table.add("phase", phase);
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> col;
            for (const auto& o : obs) col.push_back(o.mean[j]);
            out.table.add(indexed("mean_", j), std::move(col));
        }
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> col;
            for (const auto& o : obs) col.push_back(o.variance[j]);
            out.table.add(indexed("variance_", j), std::move(col));
        }
        return out;
    }

    const PhononObservables o = observables(compute_spectrum(rc.trap, pos), rc.trap);
    std::vector<double> site(n), impurity(n);
    for (std::size_t j = 0; j < n; ++j) {
        site[j] = static_cast<double>(j + 1);
        impurity[j] = j == rc.trap.impurity_index() ? 1.0 : 0.0;
    }
    out.table.add("site", site);
    out.table.add("impurity", impurity);
    out.table.add("mean", o.mean);
    out.table.add("variance", o.variance);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = o.correlation(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        out.table.add(indexed("corr_", j), std::move(col));
    }
    double total = 0.0;
    for (double m : o.mean) total += m;
    out.summary["phase"] = std::string(to_string(o.phase));
    out.summary["mu_eff"] = effective_mass_ratio(rc.trap);
    out.summary["total_mean"] = total;
    return out;
}

inline RunOutput run_sweep_command(const RunConfig& rc) {
    const SweepSchedule schedule = rc.schedule.schedule();
    const SweepOptions options;
    const EquilibriumPositions pos = solve_equilibrium(rc.trap.n_ions);
    const SweepResult sweep = run_sweep(rc.trap, schedule, pos, options);
    const AdiabaticReport rep = adiabatic_check(sweep, schedule, options.adiabatic_threshold);
    const std::size_t n = rc.trap.n_ions;
    const std::size_t steps = sweep.times.size();

    const auto obs = parallel_map(steps, [&](std::size_t i) {
        TrapConfig c = rc.trap;
        c.dipole_beta = sweep.omega_s[i];
        return observables(compute_spectrum(c, pos), c);
    });

    RunOutput out;
    out.table.add("t", sweep.times);
    out.table.add("omega_s", sweep.omega_s);
    out.table.add("mu_eff", sweep.mu_eff);
    std::vector<Eigen::VectorXd> freqs;
    for (const auto& s : sweep.spectra) freqs.push_back(s.freqs);
    auto fcols = columns_of(freqs, n);
    for (std::size_t k = 0; k < n; ++k) out.table.add(indexed("omega_", k), std::move(fcols[k]));
    std::vector<double> smax(steps), rmax(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        smax[i] = sweep.s_coupling[i].cwiseAbs().maxCoeff();
        rmax[i] = sweep.r_coupling[i].cwiseAbs().maxCoeff();
    }
    out.table.add("max_abs_s", smax);
    out.table.add("max_abs_r", rmax);
    out.table.add("adiabatic_margin", sweep.adiabatic_margin);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> col(steps);
        for (std::size_t i = 0; i < steps; ++i) col[i] = obs[i].mean[j];
        out.table.add(indexed("mean_", j), std::move(col));
    }

    const TimeConversion tc = reference_sweep_time();
    out.summary["transition_omega_s"] =
        sweep.transition_omega_s ? nlohmann::ordered_json(*sweep.transition_omega_s) : nlohmann::ordered_json(nullptr);
    out.summary["omega_s0"] = schedule.omega_s0;
    out.summary["adiabatic"] = {{"worst_ratio", rep.worst_ratio},
                                {"worst_time", rep.worst_time},
                                {"worst_pair", {rep.worst_k + 1, rep.worst_q + 1}},
                                {"min_gap", rep.min_gap},
                                {"threshold", rep.threshold},
                                {"passed", rep.passed},
                                {"crossing_lhs", rep.crossing_lhs},
                                {"crossing_rhs", rep.crossing_rhs},
                                {"crossing_estimate_holds", rep.crossing_estimate_holds},
                                {"crossing_normalization", "lhs = d(omega_s^2)/dt [omega_x0^3], rhs = min_gap^2 * T"}};
    out.summary["time_units"] = {{"unit", "1/omega_x0"},
                                 {"reference_omega_x0_rad_per_s", tc.omega_x0_rad_per_s},
                                 {"reference_seconds", tc.seconds},
                                 {"reference_duration", tc.dimensionless}};
    if (!rep.passed) {
        out.warning = "adiabatic condition violated: max |S_kq|/|w_k-w_q| = " + Table::format(rep.worst_ratio) +
                      " exceeds " + Table::format(rep.threshold);
        if (rc.strict) out.exit_code = kAdiabaticFailure;
    }
    return out;
}

inline RunOutput run_phase_diagram(const RunConfig& rc) {
    rc.trap.validate();
    const ScanSpec scan = rc.scan.value_or(ScanSpec{"mass_ratio", 0.5, 1.5, 101});
    scan.validate();
    const EquilibriumPositions pos = solve_equilibrium(rc.trap.n_ions);
    const std::size_t jm = rc.trap.impurity_index();

    struct Point {
        double mu_eff, mean, variance, com, ll;
        Phase phase;
    };
    std::vector<double> values(scan.count);
    for (std::size_t i = 0; i < scan.count; ++i) values[i] = scan.value(i);
    const auto pts = parallel_map(scan.count, [&](std::size_t i) {
        TrapConfig c = rc.trap;
        scan.apply(c, values[i]);
        const ModeSpectrum s = compute_spectrum(c, pos);
        const auto mean = mean_occupation(s, c);
        const auto var = variance(s, c);
        return Point{effective_mass_ratio(c), mean[jm], var[jm], s.freqs[s.com_index()], s.freqs[s.ll_index()],
                     classify_phase(c)};
    });

    RunOutput out;
    out.table.add(scan.column(), values);
    std::vector<double> mu_eff, mean, var, com, ll;
    std::vector<std::string> phase;
    for (const auto& p : pts) {
        mu_eff.push_back(p.mu_eff);
        phase.emplace_back(to_string(p.phase));
        mean.push_back(p.mean);
        var.push_back(p.variance);
        com.push_back(p.com);
        ll.push_back(p.ll);
    }
    out.table.add("mu_eff", mu_eff);
    out.table.add("phase", phase);
    out.table.add("impurity_mean", mean);
    out.table.add("impurity_variance", var);
    out.table.add("omega_com", com);
    out.table.add("omega_ll", ll);
    return out;
}

inline constexpr double kOracleAgreement = 1e-6;

inline RunOutput run_oracle_check(const RunConfig& rc) {
    rc.trap.validate();
    const std::size_t cutoff = rc.cutoff ? rc.cutoff : rc.trap.ll_phonons + 4;
    const ModeSpectrum s = compute_spectrum(rc.trap);
    const PhononObservables fast = observables(s, rc.trap);
    const PhononObservables exact = oracle::exact_observables(rc.trap, s, cutoff);
    const std::size_t n = rc.trap.n_ions;

    RunOutput out;
    std::vector<double> site(n);
    for (std::size_t j = 0; j < n; ++j) site[j] = static_cast<double>(j + 1);
    out.table.add("site", site);
    out.table.add("mean", fast.mean);
    out.table.add("mean_oracle", exact.mean);
    out.table.add("variance", fast.variance);
    out.table.add("variance_oracle", exact.variance);

    double diff = (fast.correlation - exact.correlation).cwiseAbs().maxCoeff();
    for (std::size_t j = 0; j < n; ++j) {
        diff = std::max(diff, std::abs(fast.mean[j] - exact.mean[j]));
        diff = std::max(diff, std::abs(fast.variance[j] - exact.variance[j]));
    }
    out.summary["cutoff"] = cutoff;
    out.summary["max_abs_difference"] = diff;
    out.summary["agrees"] = diff <= kOracleAgreement;
    if (diff > kOracleAgreement) {
        out.warning = "closed-form observables disagree with the Fock-space oracle by " + Table::format(diff);
        out.exit_code = kNumericalFailure;
    }
    return out;
}

}  // namespace detail

/// Runs one command. Bad input surfaces as std::invalid_argument and solver
/// failures as NumericalError; callers map those to exit codes.
inline RunOutput run(const RunConfig& rc) {
    if (rc.scan) rc.scan->validate();
    if (rc.format != "csv" && rc.format != "json") throw std::invalid_argument("format must be csv or json");
    if (rc.command == "equilibrium") return detail::run_equilibrium(rc);
    if (rc.command == "spectrum") return detail::run_spectrum(rc);
    if (rc.command == "observables") return detail::run_observables(rc);
    if (rc.command == "sweep") return detail::run_sweep_command(rc);
    if (rc.command == "phase-diagram") return detail::run_phase_diagram(rc);
    if (rc.command == "oracle-check") return detail::run_oracle_check(rc);
    throw std::invalid_argument("unknown command '" + rc.command + "'");
}

/// Full JSON document: resolved config and tool version under `meta`, the
/// table under `data`.
inline nlohmann::ordered_json to_json_document(const RunConfig& rc, const RunOutput& out) {
    nlohmann::ordered_json doc;
    doc["meta"] = {{"tool", kToolName}, {"version", kToolVersion}, {"config", to_json(rc)}, {"summary", out.summary}};
    if (!out.warning.empty()) doc["meta"]["warning"] = out.warning;
    doc["data"] = out.table.to_json();
    return doc;
}

inline void write_output(std::ostream& os, const RunConfig& rc, const RunOutput& out) {
    if (rc.format == "json")
        os << to_json_document(rc, out).dump(2) << '\n';
    else
        out.table.write_csv(os);
}

}  // namespace ionchain::cli
