#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "satqb/config.hpp"
#include "satqb/io.hpp"
#include "satqb/model.hpp"
#include "satqb/observables.hpp"
#include "satqb/steadystate.hpp"
#include "satqb/sweep.hpp"

namespace satqb::commands {

namespace fs = std::filesystem;

struct CommandResult {
    std::size_t total_points = 0;
    std::size_t failed_points = 0;
    std::vector<std::string> errors;   // one message per failed point
    std::vector<std::string> warnings; // e.g. boundary maxima
    std::vector<fs::path> files;
    nlohmann::json report; // cmd_check content

    bool all_failed() const { return total_points > 0 && failed_points == total_points; }
    bool partial() const { return failed_points > 0 && failed_points < total_points; }
};

namespace detail {

inline fs::path ensure_out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string());
    return dir;
}

inline std::vector<double> default_ns_set() { return {0.0, 0.3, 0.6, 1.0, 1.5, 3.0}; }

inline SweepSpec resolve_sweep(const RunConfig& cfg, std::vector<double> fallback_values,
                               const std::string& fallback_param = "n_s") {
    if (cfg.sweep) {
        cfg.validate_sweep();
        return *cfg.sweep;
    }
    return SweepSpec{fallback_param, std::move(fallback_values)};
}

inline nlohmann::json meta(const RunConfig& cfg, const std::string& command) {
    nlohmann::json j = cfg.resolved();
    j["command"] = command;
    return j;
}

inline dynamics::PropagateOptions prop_options(const RunConfig& cfg) {
    dynamics::PropagateOptions opts;
    opts.rtol = cfg.rtol;
    opts.atol = std::min(1e-12, cfg.rtol * 1e-3);
    opts.mode = cfg.use_expm ? dynamics::Propagator::Expm : dynamics::Propagator::RK45;
    return opts;
}

/// Trajectory summary: grid argmax of energy plus the matching ergotropy peak.
struct TrajectoryPeak {
    double tau_star = 0.0;
    double max_energy = 0.0;
    double max_ergotropy = 0.0;
};

inline TrajectoryPeak peak_of(const TrajectoryRecord& rec) {
    TrajectoryPeak p;
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
        if (rec.energy[k] > p.max_energy) {
            p.max_energy = rec.energy[k];
            p.tau_star = rec.times[k];
        }
        p.max_ergotropy = std::max(p.max_ergotropy, rec.ergotropy[k]);
    }
    return p;
}

} // namespace detail

/// Closed-form spectrum over an n_s grid (one CSV, all rows).
inline CommandResult cmd_spectrum(const RunConfig& cfg) {
    CommandResult res;
    std::vector<double> ns_grid;
    if (cfg.sweep) {
        if (cfg.sweep->param != "n_s")
            throw ConfigError("spectrum: the sweep axis is n_s");
        ns_grid = cfg.sweep->values;
    } else {
        for (int k = 0; k <= 20; ++k) ns_grid.push_back(0.1 * k); // [0, 2]
    }
    if (ns_grid.empty()) throw ConfigError("spectrum: empty n_s grid");
    for (double v : ns_grid)
        if (!(v >= 0.0)) throw ConfigError("spectrum: n_s values must be >= 0");

    const fs::path dir = detail::ensure_out_dir(cfg);
    res.total_points = ns_grid.size();

    if (cfg.format == OutputFormat::Json) {
        nlohmann::json rows = nlohmann::json::array();
        for (double ns : ns_grid) {
            ModelParams p = cfg.params;
            p.n_s = ns;
            const auto t = model::spectrum_table(p, cfg.include_kerr);
            for (std::size_t i = 0; i < t.n.size(); ++i) {
                nlohmann::json row{{"n_s", ns}, {"n", t.n[i]}, {"E_n", t.E_n[i]}};
                if (t.E_n_kerr) row["E_n_kerr"] = (*t.E_n_kerr)[i];
                rows.push_back(row);
            }
        }
        const fs::path file = dir / "spectrum.json";
        io::write_text(file, rows.dump(2) + "\n");
        io::write_sidecar(file, detail::meta(cfg, "spectrum"));
        res.files.push_back(file);
        return res;
    }

    io::CsvWriter csv = io::spectrum_csv(cfg.include_kerr);
    for (double ns : ns_grid) {
        ModelParams p = cfg.params;
        p.n_s = ns;
        io::append_spectrum_rows(csv, ns, model::spectrum_table(p, cfg.include_kerr));
    }
    const fs::path file = dir / "spectrum.csv";
    csv.write(file);
    io::write_sidecar(file, detail::meta(cfg, "spectrum"));
    res.files.push_back(file);
    return res;
}

/// Charging trajectories over the sweep: one trajectory file per point
/// plus a peak summary.
inline CommandResult cmd_charge(const RunConfig& cfg) {
    CommandResult res;
    const SweepSpec sweep = detail::resolve_sweep(cfg, detail::default_ns_set());
    const std::vector<double> grid = cfg.tau_grid.materialize();
    dynamics::check_tau_grid(grid);
    const fs::path dir = detail::ensure_out_dir(cfg);
    res.total_points = sweep.values.size();

    auto job = [&](std::size_t i) {
        const ModelParams p = cfg.at_sweep_point(sweep.values[i]);
        p.validate();
        return observables::record_trajectory(p, DensityMatrix::vacuum(p.dim), grid,
                                              detail::prop_options(cfg));
    };
    const auto outcomes = sweep::run<TrajectoryRecord>(sweep.values.size(), cfg.jobs, job);

    io::CsvWriter summary({sweep.param, "tau_star", "max_energy", "max_ergotropy"});
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const double v = sweep.values[i];
        if (!outcomes[i].ok) {
            ++res.failed_points;
            res.errors.push_back(sweep.param + " = " + io::compact_double(v) + ": " +
                                 outcomes[i].error);
            continue;
        }
        const TrajectoryRecord& rec = outcomes[i].value;
        const fs::path file =
            dir / ("charge_" + sweep.param + "_" + io::compact_double(v) +
                   (cfg.format == OutputFormat::Json ? ".json" : ".csv"));
        if (cfg.format == OutputFormat::Json)
            io::write_text(file, io::trajectory_json(rec).dump(2) + "\n");
        else
            io::trajectory_csv(rec).write(file);
        nlohmann::json m = detail::meta(cfg, "charge");
        m["sweep_point"] = {{sweep.param, v}};
        io::write_sidecar(file, m);
        res.files.push_back(file);

        const auto peak = detail::peak_of(rec);
        summary.add_row({io::format_double(v), io::format_double(peak.tau_star),
                         io::format_double(peak.max_energy),
                         io::format_double(peak.max_ergotropy)});
    }
    const fs::path sfile = dir / "charge_summary.csv";
    summary.write(sfile);
    io::write_sidecar(sfile, detail::meta(cfg, "charge"));
    res.files.push_back(sfile);
    return res;
}

/// max E(tau) over (n_s, gamma) pairs; boundary maxima are flagged.
inline CommandResult cmd_maxenergy(const RunConfig& cfg) {
    CommandResult res;
    std::vector<double> ns_values;
    if (cfg.sweep) {
        if (cfg.sweep->param != "n_s")
            throw ConfigError("maxenergy: the sweep axis is n_s");
        ns_values = cfg.sweep->values;
    } else {
        for (int k = 0; k <= 20; ++k) ns_values.push_back(3.0 * k / 20.0); // [0, 3]
    }
    if (ns_values.empty()) throw ConfigError("maxenergy: empty n_s grid");
    std::vector<double> gammas = cfg.gammas;
    if (gammas.empty()) gammas = {0.2, 0.4};
    const double tau_max = cfg.tau_grid.stop;

    struct Point {
        double ns, gamma;
        steadystate::MaxEnergyResult r;
    };
    std::vector<std::pair<double, double>> pts;
    for (double g : gammas)
        for (double ns : ns_values) pts.emplace_back(ns, g);
    res.total_points = pts.size();

    auto job = [&](std::size_t i) {
        ModelParams p = cfg.params;
        p.n_s = pts[i].first;
        p.gamma = pts[i].second;
        p.validate();
        steadystate::MaxEnergyOptions opts;
        opts.prop = detail::prop_options(cfg);
        Point out{pts[i].first, pts[i].second, steadystate::max_energy(p, tau_max, opts)};
        return out;
    };
    const auto outcomes = sweep::run<Point>(pts.size(), cfg.jobs, job);

    const fs::path dir = detail::ensure_out_dir(cfg);
    io::CsvWriter csv({"n_s", "gamma", "tau_star", "E_max"});
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok) {
            ++res.failed_points;
            res.errors.push_back("n_s = " + io::compact_double(pts[i].first) +
                                 ", gamma = " + io::compact_double(pts[i].second) + ": " +
                                 outcomes[i].error);
            continue;
        }
        const Point& pt = outcomes[i].value;
        csv.add_row({io::format_double(pt.ns), io::format_double(pt.gamma),
                     io::format_double(pt.r.tau_star), io::format_double(pt.r.e_max)});
        if (pt.r.at_boundary)
            res.warnings.push_back("n_s = " + io::compact_double(pt.ns) + ", gamma = " +
                                   io::compact_double(pt.gamma) +
                                   ": maximum sits at the tau_max boundary");
    }
    const fs::path file = dir / "maxenergy.csv";
    csv.write(file);
    io::write_sidecar(file, detail::meta(cfg, "maxenergy"));
    res.files.push_back(file);
    return res;
}

/// Wigner snapshots along one charging run, plus a per-snapshot minimum
/// summary.
inline CommandResult cmd_wigner(const RunConfig& cfg) {
    CommandResult res;
    if (cfg.snapshot_times.empty()) throw ConfigError("wigner: no snapshot times");
    std::vector<double> snaps = cfg.snapshot_times;
    for (double t : snaps)
        if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("wigner: bad snapshot time");
    if (!std::is_sorted(snaps.begin(), snaps.end()))
        throw ConfigError("wigner: snapshot times must be sorted ascending");
    for (std::size_t i = 1; i < snaps.size(); ++i)
        if (snaps[i] == snaps[i - 1]) throw ConfigError("wigner: duplicate snapshot time");
    if (cfg.wigner_points < 2) throw ConfigError("wigner: need at least a 2x2 grid");

    cfg.params.validate();
    const fs::path dir = detail::ensure_out_dir(cfg);
    res.total_points = snaps.size();

    // propagate once through all snapshot times
    std::vector<double> prop_grid = snaps;
    bool leading_zero = prop_grid.front() == 0.0;
    std::vector<DensityMatrix> states;
    const DensityMatrix rho0 = DensityMatrix::vacuum(cfg.params.dim);
    if (leading_zero && prop_grid.size() == 1) {
        states.push_back(rho0);
    } else {
        states = dynamics::propagate_params(cfg.params, rho0, prop_grid,
                                            detail::prop_options(cfg));
    }

    WignerGridSpec spec;
    spec.re_min = spec.im_min = -cfg.wigner_extent;
    spec.re_max = spec.im_max = cfg.wigner_extent;
    spec.re_points = spec.im_points = cfg.wigner_points;

    observables::WignerEvaluator eval(cfg.params.dim);
    io::CsvWriter summary({"tau", "min_W"});
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        try {
            const WignerGrid grid = eval.evaluate(states[i], spec);
            const fs::path file =
                dir / ("wigner_tau_" + io::compact_double(snaps[i]) +
                       (cfg.format == OutputFormat::Json ? ".json" : ".csv"));
            if (cfg.format == OutputFormat::Json)
                io::write_text(file, io::wigner_json(grid).dump() + "\n");
            else
                io::wigner_csv(grid).write(file);
            nlohmann::json m = detail::meta(cfg, "wigner");
            m["snapshot_tau"] = snaps[i];
            io::write_sidecar(file, m);
            res.files.push_back(file);
            summary.add_row({io::format_double(snaps[i]), io::format_double(grid.min_value())});
        } catch (const TruncationInsufficient& e) {
            ++res.failed_points;
            res.errors.push_back("tau = " + io::compact_double(snaps[i]) + ": " + e.what() +
                                 " (re-run with a larger --dim)");
        } catch (const std::exception& e) {
            ++res.failed_points;
            res.errors.push_back("tau = " + io::compact_double(snaps[i]) + ": " + e.what());
        }
    }
    const fs::path sfile = dir / "wigner_summary.csv";
    summary.write(sfile);
    io::write_sidecar(sfile, detail::meta(cfg, "wigner"));
    res.files.push_back(sfile);
    return res;
}

/// Steady-state energy and ergotropy over the sweep (Liouvillian
/// eigensolve per point).
inline CommandResult cmd_steady(const RunConfig& cfg) {
    CommandResult res;
    const SweepSpec sweep = detail::resolve_sweep(cfg, detail::default_ns_set());
    if (sweep.param != "gamma" && !(cfg.params.gamma > 0.0))
        throw ConfigError("steady: gamma must be > 0");

    struct Point {
        double value;
        double gamma;
        SteadyStateResult ss;
        double e_max = 0.0;
    };
    res.total_points = sweep.values.size();

    auto job = [&](std::size_t i) {
        const ModelParams p = cfg.at_sweep_point(sweep.values[i]);
        p.validate();
        auto L = dynamics::build_liouvillian(p);
        Point out{sweep.values[i], p.gamma, steadystate::steady_state(L), 0.0};
        if (cfg.compare_max) {
            steadystate::MaxEnergyOptions mopts;
            mopts.prop = detail::prop_options(cfg);
            out.e_max = steadystate::max_energy(p, cfg.tau_grid.stop, mopts).e_max;
        }
        return out;
    };
    const auto outcomes = sweep::run<Point>(sweep.values.size(), cfg.jobs, job);

    const fs::path dir = detail::ensure_out_dir(cfg);
    std::vector<std::string> header{"n_s", "gamma", "E_ss", "ergotropy_ss", "spectral_gap",
                                    "residual"};
    if (cfg.compare_max) header.push_back("E_max");
    io::CsvWriter csv(std::move(header));
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok) {
            ++res.failed_points;
            res.errors.push_back(sweep.param + " = " + io::compact_double(sweep.values[i]) +
                                 ": " + outcomes[i].error);
            continue;
        }
        const Point& pt = outcomes[i].value;
        const ModelParams p = cfg.at_sweep_point(pt.value);
        std::vector<std::string> row{
            io::format_double(p.n_s),           io::format_double(pt.gamma),
            io::format_double(pt.ss.energy_ss), io::format_double(pt.ss.ergotropy_ss),
            io::format_double(pt.ss.spectral_gap), io::format_double(pt.ss.residual)};
        if (cfg.compare_max) row.push_back(io::format_double(pt.e_max));
        csv.add_row(row);
    }
    const fs::path file = dir / "steady.csv";
    csv.write(file);
    io::write_sidecar(file, detail::meta(cfg, "steady"));
    res.files.push_back(file);
    return res;
}

/// Validation battery: truncation self-convergence, integrator vs exact
/// propagator, and the short-time operator algebra. Failures are report
/// content, not process errors.
inline CommandResult cmd_check(const RunConfig& cfg) {
    CommandResult res;
    cfg.params.validate();
    const fs::path dir = detail::ensure_out_dir(cfg);
    nlohmann::json report;
    bool all_pass = true;

    const std::vector<double> grid = cfg.tau_grid.materialize();
    dynamics::check_tau_grid(grid);
    const auto opts = detail::prop_options(cfg);

    { // truncation: dim vs dim + 10 energy curves
        ModelParams lo = cfg.params;
        ModelParams hi = cfg.params;
        hi.dim = lo.dim + 10;
        const auto rec_lo =
            observables::record_trajectory(lo, DensityMatrix::vacuum(lo.dim), grid, opts);
        const auto rec_hi =
            observables::record_trajectory(hi, DensityMatrix::vacuum(hi.dim), grid, opts);
        double max_diff = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k)
            max_diff = std::max(max_diff, std::abs(rec_lo.energy[k] - rec_hi.energy[k]));
        const bool pass = max_diff <= 1e-6;
        report["truncation"] = {{"dim", lo.dim},
                                {"dim_ref", hi.dim},
                                {"max_energy_diff", max_diff},
                                {"tol", 1e-6},
                                {"pass", pass}};
        all_pass = all_pass && pass;
    }

    { // integrator vs exact propagator at 10 sampled times
        auto L = dynamics::build_liouvillian(cfg.params);
        std::vector<double> samples;
        const std::size_t stride = std::max<std::size_t>(1, grid.size() / 10);
        for (std::size_t k = stride - 1; k < grid.size() && samples.size() < 10; k += stride)
            if (grid[k] > 0.0) samples.push_back(grid[k]);
        if (samples.empty()) samples.push_back(grid.back());
        dynamics::PropagateOptions tight = opts;
        tight.mode = dynamics::Propagator::RK45;
        tight.rtol = std::min(opts.rtol, 1e-11);
        tight.atol = 1e-14;
        const auto rk = dynamics::propagate_params(cfg.params,
                                                   DensityMatrix::vacuum(cfg.params.dim),
                                                   samples, tight);
        const auto ex = dynamics::propagate_expm(L, DensityMatrix::vacuum(cfg.params.dim),
                                                 samples);
        double max_td = 0.0;
        for (std::size_t k = 0; k < samples.size(); ++k) {
            ComplexMatrix d = rk[k].mat - ex[k].mat;
            d = 0.5 * (d + d.adjoint()).eval();
            Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(d, Eigen::EigenvaluesOnly);
            max_td = std::max(max_td, 0.5 * es.eigenvalues().cwiseAbs().sum());
        }
        const bool pass = max_td <= 1e-8;
        report["propagator"] = {{"sampled_times", samples},
                                {"max_trace_distance", max_td},
                                {"tol", 1e-8},
                                {"pass", pass}};
        all_pass = all_pass && pass;
    }

    { // short-time algebra: closed forms and convergence order
        if (cfg.params.dim < 3) {
            report["taylor"] = {{"pass", false},
                                {"note", "dim < 3 cannot represent the second-order form"}};
            all_pass = false;
        } else {
            auto L = dynamics::build_liouvillian(cfg.params);
            const auto rho0 = DensityMatrix::vacuum(cfg.params.dim);
            const double r1 =
                (dynamics::taylor_term(L, rho0, 1) - dynamics::vacuum_first_order(cfg.params))
                    .norm();
            const double r2 =
                (dynamics::taylor_term(L, rho0, 2) - dynamics::vacuum_second_order(cfg.params))
                    .norm();
            const double tau = 0.02;
            const double e1 = std::log2(dynamics::short_time_check(L, rho0, 1, tau) /
                                        dynamics::short_time_check(L, rho0, 1, tau / 2.0));
            const double e2 = std::log2(dynamics::short_time_check(L, rho0, 2, tau) /
                                        dynamics::short_time_check(L, rho0, 2, tau / 2.0));
            const bool pass = r1 <= 1e-12 && r2 <= 1e-12 && e1 >= 1.8 && e1 <= 2.2 &&
                              e2 >= 2.8 && e2 <= 3.2;
            report["taylor"] = {{"first_order_residual", r1},
                                {"second_order_residual", r2},
                                {"order1_exponent", e1},
                                {"order2_exponent", e2},
                                {"pass", pass}};
            all_pass = all_pass && pass;
        }
    }

    report["pass"] = all_pass;
    const fs::path file = dir / "check_report.json";
    io::write_text(file, report.dump(2) + "\n");
    io::write_sidecar(file, detail::meta(cfg, "check"));
    res.files.push_back(file);
    res.report = report;
    res.total_points = 1;
    return res;
}

} // namespace satqb::commands
