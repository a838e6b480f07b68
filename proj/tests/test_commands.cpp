#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "satqb/commands.hpp"

using namespace satqb;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("satqb_cmd_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// header + rows of a CSV, split into cells
std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

} // namespace

TEST_CASE("spectrum command writes the documented table", "[commands]") {
    TempDir tmp("spectrum");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.dim = 31;
    cfg.include_kerr = true;
    auto res = commands::cmd_spectrum(cfg);
    REQUIRE(res.files.size() == 1);
    auto rows = read_csv(res.files[0]);
    REQUIRE(rows.size() == 1 + 21 * 31);
    CHECK(rows[0] == std::vector<std::string>{"n_s", "n", "E_n", "E_n_kerr"});
    // n_s = 0 block: E_n = 2n exactly at omega = chi = 1
    for (int n = 0; n < 31; ++n) {
        CHECK(rows[1 + n][0] == "0");
        CHECK(std::stod(rows[1 + n][2]) == Approx(2.0 * n).margin(1e-14));
    }
    CHECK(fs::exists(fs::path(res.files[0].string() + ".meta.json")));

    // level densification onto the fixed window (the count at E <= 25 grows)
    auto count_below = [&](double ns_value) {
        int c = 0;
        for (std::size_t r = 1; r < rows.size(); ++r)
            if (std::stod(rows[r][0]) == ns_value && std::stod(rows[r][2]) <= 25.0) ++c;
        return c;
    };
    CHECK(count_below(2.0) > count_below(0.0));
}

TEST_CASE("spectrum command rejects an empty grid without writing", "[commands]") {
    TempDir tmp("spectrum_empty");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.sweep = SweepSpec{"n_s", {}};
    CHECK_THROWS_AS(commands::cmd_spectrum(cfg), ConfigError);
    CHECK_FALSE(fs::exists(fs::path(cfg.out_dir) / "spectrum.csv"));
}

TEST_CASE("charge command emits per-point trajectories and a summary", "[commands]") {
    TempDir tmp("charge");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.dim = 20;
    cfg.sweep = SweepSpec{"n_s", {0.0, 0.3}};
    cfg.tau_grid.stop = 10.0;
    cfg.tau_grid.points = 41;
    cfg.jobs = 2;
    auto res = commands::cmd_charge(cfg);
    CHECK(res.failed_points == 0);
    REQUIRE(res.files.size() == 3); // two trajectories + summary
    auto t0 = read_csv(fs::path(cfg.out_dir) / "charge_n_s_0.csv");
    CHECK(t0[0] == std::vector<std::string>{"tau", "energy", "ergotropy", "trace_err",
                                            "min_eig", "purity"});
    REQUIRE(t0.size() == 42);
    for (std::size_t r = 1; r < t0.size(); ++r)
        CHECK(std::stod(t0[r][2]) <= std::stod(t0[r][1]) + 1e-8); // ergotropy <= energy
    auto summary = read_csv(fs::path(cfg.out_dir) / "charge_summary.csv");
    REQUIRE(summary.size() == 3);
    CHECK(summary[0][0] == "n_s");
}

TEST_CASE("charge command isolates failing sweep points", "[commands]") {
    TempDir tmp("charge_fail");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.dim = 12;
    cfg.sweep = SweepSpec{"n_s", {-1.0, 0.5}}; // first point is invalid
    cfg.tau_grid.stop = 2.0;
    cfg.tau_grid.points = 9;
    auto res = commands::cmd_charge(cfg);
    CHECK(res.failed_points == 1);
    CHECK(res.partial());
    CHECK_FALSE(res.all_failed());
    REQUIRE(res.errors.size() == 1);
    CHECK(res.errors[0].find("n_s = -1") != std::string::npos);
    CHECK(fs::exists(fs::path(cfg.out_dir) / "charge_n_s_0.5.csv"));
    auto summary = read_csv(fs::path(cfg.out_dir) / "charge_summary.csv");
    REQUIRE(summary.size() == 2); // header + the surviving point
}

TEST_CASE("charge output is bit-identical across runs", "[commands]") {
    TempDir tmp("charge_det");
    auto run = [&](const std::string& sub) {
        RunConfig cfg;
        cfg.out_dir = (tmp.path / sub).string();
        cfg.params.dim = 14;
        cfg.sweep = SweepSpec{"n_s", {0.7}};
        cfg.tau_grid.stop = 5.0;
        cfg.tau_grid.points = 21;
        commands::cmd_charge(cfg);
        return slurp(fs::path(cfg.out_dir) / "charge_n_s_0.7.csv");
    };
    CHECK(run("a") == run("b"));
}

TEST_CASE("maxenergy command writes one row per grid point", "[commands]") {
    TempDir tmp("maxenergy");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.dim = 16;
    cfg.sweep = SweepSpec{"n_s", {0.3}};
    cfg.gammas = {0.2};
    cfg.tau_grid.stop = 20.0;
    auto res = commands::cmd_maxenergy(cfg);
    auto rows = read_csv(fs::path(cfg.out_dir) / "maxenergy.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"n_s", "gamma", "tau_star", "E_max"});
    CHECK(std::stod(rows[1][3]) > 1.0);
    CHECK(res.warnings.empty()); // interior maximum, no boundary flag
}

TEST_CASE("maxenergy flags boundary maxima", "[commands]") {
    TempDir tmp("maxenergy_boundary");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.chi = 0.0;
    cfg.params.detuning = 0.0;
    cfg.params.alpha = 0.3;
    cfg.params.dim = 14;
    cfg.sweep = SweepSpec{"n_s", {0.0}};
    cfg.gammas = {0.3};
    cfg.tau_grid.stop = 5.0; // still rising at the horizon
    auto res = commands::cmd_maxenergy(cfg);
    REQUIRE(res.warnings.size() == 1);
    CHECK(res.warnings[0].find("boundary") != std::string::npos);
}

TEST_CASE("wigner command writes snapshots and a minimum summary", "[commands]") {
    TempDir tmp("wigner");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.n_s = 1.0;
    cfg.params.alpha = 0.3;
    cfg.params.gamma = 0.01;
    cfg.params.dim = 60;
    cfg.snapshot_times = {0.0, 3.0};
    cfg.wigner_extent = 3.0;
    cfg.wigner_points = 31;
    auto res = commands::cmd_wigner(cfg);
    CHECK(res.failed_points == 0);
    auto summary = read_csv(fs::path(cfg.out_dir) / "wigner_summary.csv");
    REQUIRE(summary.size() == 3);
    CHECK(summary[0] == std::vector<std::string>{"tau", "min_W"});
    CHECK(std::stod(summary[1][1]) >= -1e-6); // vacuum snapshot stays nonnegative
    auto grid = read_csv(fs::path(cfg.out_dir) / "wigner_tau_0.csv");
    CHECK(grid[0] == std::vector<std::string>{"re_beta", "im_beta", "W"});
    REQUIRE(grid.size() == 1 + 31 * 31);
}

TEST_CASE("wigner command surfaces truncation failures with guidance", "[commands]") {
    TempDir tmp("wigner_trunc");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.n_s = 1.0;
    cfg.params.alpha = 0.3;
    cfg.params.gamma = 0.01;
    cfg.params.dim = 12; // too small by tau = 20
    cfg.snapshot_times = {0.0, 20.0};
    cfg.wigner_points = 11;
    auto res = commands::cmd_wigner(cfg);
    CHECK(res.failed_points == 1);
    CHECK(res.partial());
    REQUIRE(res.errors.size() == 1);
    CHECK(res.errors[0].find("--dim") != std::string::npos);
    CHECK(fs::exists(fs::path(cfg.out_dir) / "wigner_tau_0.csv")); // first point survived
}

TEST_CASE("wigner command validates snapshot times", "[commands]") {
    RunConfig cfg;
    cfg.snapshot_times = {};
    CHECK_THROWS_AS(commands::cmd_wigner(cfg), ConfigError);
    cfg.snapshot_times = {3.0, 1.0};
    CHECK_THROWS_AS(commands::cmd_wigner(cfg), ConfigError);
    cfg.snapshot_times = {1.0, 1.0};
    CHECK_THROWS_AS(commands::cmd_wigner(cfg), ConfigError);
    cfg.snapshot_times = {-2.0, 1.0};
    CHECK_THROWS_AS(commands::cmd_wigner(cfg), ConfigError);
}

TEST_CASE("steady command reproduces the linear fixed point", "[commands]") {
    TempDir tmp("steady");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.chi = 0.0;
    cfg.params.alpha = 0.2;
    cfg.params.gamma = 0.4;
    cfg.params.dim = 16;
    cfg.sweep = SweepSpec{"n_s", {0.0}};
    auto res = commands::cmd_steady(cfg);
    CHECK(res.failed_points == 0);
    auto rows = read_csv(fs::path(cfg.out_dir) / "steady.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"n_s", "gamma", "E_ss", "ergotropy_ss",
                                              "spectral_gap", "residual"});
    const double d = cfg.params.detuning, g = cfg.params.gamma, a = cfg.params.alpha;
    const double expect = a * a / (d * d + 0.25 * g * g);
    CHECK(std::stod(rows[1][2]) == Approx(expect).margin(1e-8));
}

TEST_CASE("steady command with no drive gives an all-zero energy column", "[commands]") {
    TempDir tmp("steady_idle");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.alpha = 0.0;
    cfg.params.dim = 10;
    cfg.sweep = SweepSpec{"n_s", {0.0, 1.0}};
    auto res = commands::cmd_steady(cfg);
    CHECK(res.failed_points == 0);
    auto rows = read_csv(fs::path(cfg.out_dir) / "steady.csv");
    REQUIRE(rows.size() == 3);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        CHECK(std::abs(std::stod(rows[r][2])) < 1e-10);
        CHECK(std::abs(std::stod(rows[r][3])) < 1e-10);
    }
}

TEST_CASE("steady command appends the comparison column on request", "[commands]") {
    TempDir tmp("steady_cmp");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.dim = 16;
    cfg.sweep = SweepSpec{"n_s", {0.3}};
    cfg.compare_max = true;
    cfg.tau_grid.stop = 60.0;
    auto res = commands::cmd_steady(cfg);
    CHECK(res.failed_points == 0);
    auto rows = read_csv(fs::path(cfg.out_dir) / "steady.csv");
    REQUIRE(rows[0].size() == 7);
    CHECK(rows[0][6] == "E_max");
    CHECK(std::stod(rows[1][2]) < std::stod(rows[1][6])); // E_ss below the peak
    CHECK_THROWS_AS([&] {
        RunConfig bad = cfg;
        bad.params.gamma = 0.0;
        commands::cmd_steady(bad);
    }(), ConfigError);
}

TEST_CASE("check command flags a broken truncation", "[commands]") {
    TempDir tmp("check_bad");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.dim = 2; // deliberately unusable
    cfg.tau_grid.stop = 5.0;
    cfg.tau_grid.points = 26;
    auto res = commands::cmd_check(cfg);
    CHECK(res.report["truncation"]["pass"] == false);
    CHECK(res.report["pass"] == false);
    CHECK(fs::exists(fs::path(cfg.out_dir) / "check_report.json"));
}

TEST_CASE("check command passes on a converged configuration", "[commands]") {
    TempDir tmp("check_ok");
    RunConfig cfg;
    cfg.out_dir = (tmp.path / "out").string();
    cfg.params.dim = 14;
    cfg.params.n_s = 1.0;
    cfg.tau_grid.stop = 5.0;
    cfg.tau_grid.points = 26;
    auto res = commands::cmd_check(cfg);
    CHECK(res.report["truncation"]["pass"] == true);
    CHECK(res.report["propagator"]["pass"] == true);
    CHECK(res.report["taylor"]["pass"] == true);
    CHECK(res.report["pass"] == true);
}

#ifdef SATQB_CLI_PATH
TEST_CASE("cli exit codes match the documented contract", "[commands]") {
    TempDir tmp("cli");
    const std::string cli = SATQB_CLI_PATH;
    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
        const int raw = std::system(cmd.c_str());
        return WEXITSTATUS(raw);
    };
    const std::string out = " --out " + (tmp.path / "o").string();
    CHECK(run("spectrum --dim 12" + out) == 0);
    CHECK(run("bogus_command") == 1);
    CHECK(run("charge --sweep-param bogus --sweep-values 1 --dim 8 --tau-max 1 --tau-points 5" +
              out) == 1);
    CHECK(run("spectrum --config /nonexistent.cfg" + out) == 1);
    // one invalid point among valid ones: partial sweep failure
    CHECK(run("charge --sweep-values -1 0.4 --dim 8 --tau-max 1 --tau-points 5" + out) == 3);
    // every point invalid: numerical failure
    CHECK(run("charge --sweep-values -1 -2 --dim 8 --tau-max 1 --tau-points 5" + out) == 2);
}
#endif
