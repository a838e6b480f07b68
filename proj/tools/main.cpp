#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "satqb/commands.hpp"
#include "satqb/config.hpp"

using namespace satqb;

namespace {

// Per-command parameter defaults. Most commands start from the charging
// baseline (omega = 1, Delta = 0.1, chi = 1, alpha = 0.5, gamma = 0.2,
// dim = 40); the Wigner command defaults to the weak-loss snapshot run
// (n_s = 1, alpha = 0.3, gamma = 0.01) at dim = 60.
RunConfig base_config(const std::string& command) {
    RunConfig cfg;
    if (command == "wigner") {
        cfg.params.n_s = 1.0;
        cfg.params.alpha = 0.3;
        cfg.params.gamma = 0.01;
        cfg.params.dim = 60;
    }
    return cfg;
}

int run_command(const std::string& command, const RunConfig& cfg) {
    commands::CommandResult res;
    if (command == "spectrum") res = commands::cmd_spectrum(cfg);
    else if (command == "charge") res = commands::cmd_charge(cfg);
    else if (command == "maxenergy") res = commands::cmd_maxenergy(cfg);
    else if (command == "wigner") res = commands::cmd_wigner(cfg);
    else if (command == "steady") res = commands::cmd_steady(cfg);
    else if (command == "check") res = commands::cmd_check(cfg);
    else throw ConfigError("unknown command " + command);

    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& e : res.errors) std::cerr << "error: " << e << "\n";
    for (const auto& f : res.files) std::cout << f.string() << "\n";
    if (command == "check")
        std::cout << (res.report.value("pass", false) ? "check: PASS" : "check: FAIL") << "\n";
    if (res.all_failed()) return 2;
    if (res.partial()) return 3;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"driven-dissipative saturable-battery simulator"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags are accepted after the subcommand too

    std::string config_path, out_dir, format;
    int jobs = -1, dim = -1;
    app.add_option("--config", config_path, "flat key = value configuration file");
    app.add_option("--out", out_dir, "output directory (default: out)");
    app.add_option("--jobs", jobs, "worker threads for sweeps (default: all cores)");
    app.add_option("--dim", dim, "Fock truncation dimension");
    app.add_option("--format", format, "artifact format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* sc_spectrum =
        app.add_subcommand("spectrum", "closed-form battery spectrum over an n_s grid");
    bool include_kerr = false;
    std::vector<double> ns_values;
    sc_spectrum->add_flag("--include-kerr", include_kerr,
                          "add the second-order (Kerr) comparison column");
    sc_spectrum->add_option("--ns-values", ns_values, "n_s grid");

    auto* sc_charge = app.add_subcommand("charge", "charging trajectories E(tau), ergotropy");
    std::string sweep_param;
    std::vector<double> sweep_values;
    double tau_max = -1.0;
    long tau_points = -1;
    sc_charge->add_option("--sweep-param", sweep_param, "ModelParams field to sweep");
    sc_charge->add_option("--sweep-values", sweep_values, "sweep values");
    sc_charge->add_option("--tau-max", tau_max, "end of the time grid");
    sc_charge->add_option("--tau-points", tau_points, "number of grid points");

    auto* sc_max = app.add_subcommand("maxenergy", "max E(tau) over an (n_s, gamma) grid");
    std::vector<double> gammas;
    sc_max->add_option("--ns-values", ns_values, "n_s grid");
    sc_max->add_option("--gammas", gammas, "loss rates to scan");
    sc_max->add_option("--tau-max", tau_max, "scan horizon");

    auto* sc_wigner = app.add_subcommand("wigner", "Wigner-function snapshots while charging");
    std::vector<double> snapshots;
    double extent = -1.0;
    int points = -1;
    sc_wigner->add_option("--snapshots", snapshots, "snapshot times");
    sc_wigner->add_option("--extent", extent, "phase-space half-width");
    sc_wigner->add_option("--points", points, "grid points per axis");

    auto* sc_steady =
        app.add_subcommand("steady", "Liouvillian steady states over the sweep");
    bool compare_max = false;
    sc_steady->add_option("--sweep-values", sweep_values, "n_s sweep values");
    sc_steady->add_flag("--compare-max", compare_max, "append the transient maximum column");
    sc_steady->add_option("--tau-max", tau_max, "horizon for the comparison column");

    auto* sc_check =
        app.add_subcommand("check", "truncation / propagator / short-time validation");
    sc_check->add_option("--tau-max", tau_max, "end of the comparison grid");
    sc_check->add_option("--tau-points", tau_points, "number of grid points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // bad usage is a configuration error
    }

    std::string command;
    for (const auto* sc :
         {sc_spectrum, sc_charge, sc_max, sc_wigner, sc_steady, sc_check})
        if (sc->parsed()) command = sc->get_name();

    try {
        RunConfig cfg = base_config(command);
        if (!config_path.empty()) config::apply_kv(cfg, config::parse_kv_file(config_path));

        // flags win over config-file values
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (jobs >= 0) cfg.jobs = jobs;
        if (dim >= 0) cfg.params.dim = dim;
        if (format == "csv") cfg.format = OutputFormat::Csv;
        if (format == "json") cfg.format = OutputFormat::Json;
        if (include_kerr) cfg.include_kerr = true;
        if (compare_max) cfg.compare_max = true;
        if (!sweep_param.empty()) {
            if (!cfg.sweep) cfg.sweep.emplace();
            cfg.sweep->param = sweep_param;
        }
        if (!sweep_values.empty()) {
            if (!cfg.sweep) cfg.sweep.emplace();
            if (cfg.sweep->param.empty()) cfg.sweep->param = "n_s";
            cfg.sweep->values = sweep_values;
        }
        if (!ns_values.empty()) {
            if (!cfg.sweep) cfg.sweep.emplace();
            cfg.sweep->param = "n_s";
            cfg.sweep->values = ns_values;
        }
        if (!gammas.empty()) cfg.gammas = gammas;
        if (tau_max > 0.0) cfg.tau_grid.stop = tau_max;
        if (tau_points > 0) cfg.tau_grid.points = tau_points;
        if (!snapshots.empty()) cfg.snapshot_times = snapshots;
        if (extent > 0.0) cfg.wigner_extent = extent;
        if (points > 0) cfg.wigner_points = points;
        if (cfg.sweep) cfg.validate_sweep();

        return run_command(command, cfg);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}
