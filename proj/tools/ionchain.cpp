// Command-line front end: builds a RunConfig from flags (optionally seeded
// from a key = value config file or a previous JSON output) and writes the
// resulting table as CSV or JSON.

#include <charconv>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ionchain/cli/run.hpp"

namespace {

using ionchain::cli::ExitCode;
using ionchain::cli::RunConfig;

void add_trap_options(CLI::App& app, RunConfig& rc) {
    app.add_option("--n,--n-ions,--n_ions", rc.trap.n_ions, "number of ions")->capture_default_str();
    app.add_option("--impurity,--impurity-site,--impurity_site", rc.trap.impurity_site, "1-based impurity site")
        ->capture_default_str();
    app.add_option("--mass-ratio,--mass_ratio", rc.trap.mass_ratio, "impurity mass / host mass")->capture_default_str();
    app.add_option("--alpha", rc.trap.alpha, "axial / transverse trap frequency")->capture_default_str();
    app.add_option("--beta,--dipole-beta,--dipole_beta", rc.trap.dipole_beta, "dipole-force frequency / omega_x0")
        ->capture_default_str();
    app.add_option("--ll-phonons,--ll_phonons", rc.trap.ll_phonons, "phonons in the lowest-lying mode")
        ->capture_default_str();
}

template <class T>
T parse_scan_field(const std::string& text, const char* what) {
    T v{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw std::invalid_argument(std::string("--scan: ") + what + " '" + text + "' is not a valid number");
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig rc;
    CLI::App app{"Transverse phonons of an impurity-doped linear ion crystal"};
    app.set_config("--config", "", "key = value file with option values (flags override)");
    app.set_version_flag("--version", ionchain::cli::kToolVersion);
    add_trap_options(app, rc);

    std::vector<std::string> scan;
    app.add_option("--scan", scan, "PARAM MIN MAX COUNT with PARAM in {mass_ratio, alpha, dipole_beta}")->expected(4);
    app.add_option("--omega-s-max,--omega_s_max", rc.schedule.omega_s_max, "final dipole frequency (sweep)")
        ->capture_default_str();
    app.add_option("--duration", rc.schedule.duration, "sweep duration in 1/omega_x0")->capture_default_str();
    app.add_option("--steps", rc.schedule.steps, "sweep time-grid points")->capture_default_str();
    app.add_option("--law", rc.schedule.law, "sweep law: sqrt, linear, constant")->capture_default_str();
    app.add_option("--cutoff", rc.cutoff, "oracle Fock cutoff per mode (0: ll_phonons + 4)");
    app.add_flag("--strict", rc.strict, "exit 4 when the sweep violates the adiabatic condition");
    app.add_option("--output", rc.output, "output file (default stdout)");
    app.add_option("--format", rc.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    std::string replay;
    app.add_option("--replay", replay, "rerun the configuration stored in a JSON output file");

    for (const char* name : {"equilibrium", "spectrum", "observables", "sweep", "phase-diagram", "oracle-check"})
        app.add_subcommand(name)->fallthrough();
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ExitCode::kUsageError;
    }

    try {
        if (!replay.empty()) {
            std::ifstream in(replay);
            if (!in) throw std::invalid_argument("cannot read " + replay);
            const nlohmann::json doc = nlohmann::json::parse(in);
            const std::string output = rc.output;
            const std::string format = rc.format;
            rc = ionchain::cli::run_config_from_json(doc.at("meta").at("config"));
            // the stored destination is never reused, so a replay cannot overwrite its own input
            rc.output = output;
            if (!app.get_option("--format")->empty()) rc.format = format;
        } else {
            const auto subs = app.get_subcommands();
            if (subs.empty()) throw std::invalid_argument("a command is required (see --help)");
            rc.command = subs.front()->get_name();
            if (!scan.empty())
                rc.scan = ionchain::cli::ScanSpec{scan[0], parse_scan_field<double>(scan[1], "MIN"),
                                                  parse_scan_field<double>(scan[2], "MAX"),
                                                  parse_scan_field<std::size_t>(scan[3], "COUNT")};
        }

        const auto out = ionchain::cli::run(rc);
        if (rc.output.empty()) {
            ionchain::cli::write_output(std::cout, rc, out);
        } else {
            std::ofstream os(rc.output, std::ios::binary);
            if (!os) throw std::invalid_argument("cannot write " + rc.output);
            ionchain::cli::write_output(os, rc, out);
            std::cout << rc.command << ": wrote " << out.table.rows() << " rows to " << rc.output << '\n';
            if (!out.summary.empty()) std::cout << out.summary.dump() << '\n';
        }
        if (!out.warning.empty()) std::cerr << "warning: " << out.warning << '\n';
        return out.exit_code;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ExitCode::kUsageError;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ExitCode::kUsageError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ExitCode::kUsageError;
    } catch (const ionchain::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return ExitCode::kNumericalFailure;
    }
}
