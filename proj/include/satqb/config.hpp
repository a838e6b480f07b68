#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "satqb/errors.hpp"
#include "satqb/model.hpp"

namespace satqb {

/// One sweep axis: a ModelParams field name and the values it takes.
struct SweepSpec {
    std::string param;
    std::vector<double> values;
};

struct TauGridSpec {
    double start = 0.0;
    double stop = 100.0;
    long points = 2001;
    std::vector<double> explicit_grid; // wins over start/stop/points when set

    std::vector<double> materialize() const {
        if (!explicit_grid.empty()) return explicit_grid;
        if (points < 2) throw ConfigError("tau grid needs at least 2 points");
        if (!(stop > start)) throw ConfigError("tau grid needs stop > start");
        std::vector<double> g(points);
        for (long k = 0; k < points; ++k)
            g[k] = start + (stop - start) * static_cast<double>(k) /
                               static_cast<double>(points - 1);
        return g;
    }
};

enum class OutputFormat { Csv, Json };

/// Fully resolved run configuration: model parameters, sweep axis, time
/// grid, and output routing.
struct RunConfig {
    ModelParams params;
    std::optional<SweepSpec> sweep;
    TauGridSpec tau_grid;
    std::string out_dir = "out";
    OutputFormat format = OutputFormat::Csv;
    bool truncation_check = false;
    int jobs = 0; // 0 = hardware concurrency

    // command-specific knobs
    bool include_kerr = false;
    std::vector<double> snapshot_times{0.0, 2.0, 5.0, 10.0, 15.0, 20.0};
    double wigner_extent = 4.0;
    int wigner_points = 101;
    std::vector<double> gammas; // maxenergy: loss rates to scan
    bool compare_max = false;   // steady: append the transient maximum column
    double rtol = 1e-9;
    bool use_expm = false;

    void validate_sweep() const {
        if (!sweep) return;
        static const std::vector<std::string> fields{"omega", "detuning", "chi",
                                                     "n_s",   "alpha",    "gamma", "dim"};
        bool known = false;
        for (const auto& f : fields) known = known || (f == sweep->param);
        if (!known)
            throw ConfigError("sweep parameter '" + sweep->param +
                              "' is not a ModelParams field");
        if (sweep->values.empty()) throw ConfigError("sweep value list is empty");
    }

    ModelParams at_sweep_point(double v) const {
        ModelParams p = params;
        if (!sweep) return p;
        if (sweep->param == "omega") p.omega = v;
        else if (sweep->param == "detuning") p.detuning = v;
        else if (sweep->param == "chi") p.chi = v;
        else if (sweep->param == "n_s") p.n_s = v;
        else if (sweep->param == "alpha") p.alpha = v;
        else if (sweep->param == "gamma") p.gamma = v;
        else if (sweep->param == "dim") p.dim = static_cast<int>(v);
        return p;
    }

    nlohmann::json resolved() const {
        nlohmann::json j;
        j["params"] = {{"omega", params.omega},   {"detuning", params.detuning},
                       {"drive_freq", params.drive_freq()},
                       {"chi", params.chi},       {"n_s", params.n_s},
                       {"alpha", params.alpha},   {"gamma", params.gamma},
                       {"dim", params.dim}};
        if (sweep) j["sweep"] = {{"param", sweep->param}, {"values", sweep->values}};
        if (tau_grid.explicit_grid.empty())
            j["tau_grid"] = {{"start", tau_grid.start},
                             {"stop", tau_grid.stop},
                             {"points", tau_grid.points}};
        else
            j["tau_grid"] = {{"explicit", tau_grid.explicit_grid}};
        j["out_dir"] = out_dir;
        j["format"] = format == OutputFormat::Csv ? "csv" : "json";
        j["jobs"] = jobs;
        j["include_kerr"] = include_kerr;
        j["snapshot_times"] = snapshot_times;
        j["wigner_extent"] = wigner_extent;
        j["wigner_points"] = wigner_points;
        j["gammas"] = gammas;
        j["compare_max"] = compare_max;
        j["rtol"] = rtol;
        j["propagator"] = use_expm ? "expm" : "rk45";
        j["truncation_check"] = truncation_check;
        return j;
    }
};

namespace config {

using ConfigValue = std::variant<double, bool, std::string, std::vector<double>>;
using KeyValues = std::map<std::string, ConfigValue>;

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_number(const std::string& tok, int line_no) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        throw ConfigError("config line " + std::to_string(line_no) + ": bad number '" + tok +
                          "'");
    }
    if (used != tok.size())
        throw ConfigError("config line " + std::to_string(line_no) + ": bad number '" + tok +
                          "'");
    return v;
}

inline ConfigValue parse_value(const std::string& raw, int line_no) {
    const std::string tok = strip(raw);
    if (tok.empty())
        throw ConfigError("config line " + std::to_string(line_no) + ": missing value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.front() == '"') {
        if (tok.size() < 2 || tok.back() != '"')
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": unterminated string");
        return tok.substr(1, tok.size() - 2);
    }
    if (tok.front() == '[') {
        if (tok.back() != ']')
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": unterminated list");
        std::vector<double> vals;
        std::string inner = tok.substr(1, tok.size() - 2);
        std::stringstream ss(inner);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = strip(item);
            if (item.empty()) continue;
            vals.push_back(parse_number(item, line_no));
        }
        return vals;
    }
    return parse_number(tok, line_no);
}

} // namespace detail

/// Flat key/value configuration format, one `key = value` per line:
///   - `#` starts a comment (outside strings); blank lines are skipped
///   - keys match [A-Za-z_][A-Za-z0-9_]*
///   - values: number, true/false, "string", or [num, num, ...]
///   - a repeated key overrides the earlier value
inline KeyValues parse_kv(std::istream& in) {
    KeyValues kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_string = !in_string;
            if (line[i] == '#' && !in_string) {
                line = line.substr(0, i);
                break;
            }
        }
        line = detail::strip(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::strip(line.substr(0, eq));
        if (key.empty() || !(std::isalpha(static_cast<unsigned char>(key[0])) || key[0] == '_'))
            throw ConfigError("config line " + std::to_string(line_no) + ": bad key '" + key +
                              "'");
        for (char c : key)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
                throw ConfigError("config line " + std::to_string(line_no) + ": bad key '" +
                                  key + "'");
        kv[key] = detail::parse_value(line.substr(eq + 1), line_no);
    }
    return kv;
}

inline KeyValues parse_kv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    return parse_kv(f);
}

namespace detail {

inline double want_number(const ConfigValue& v, const std::string& key) {
    if (const double* d = std::get_if<double>(&v)) return *d;
    throw ConfigError("config key '" + key + "' must be a number");
}

inline bool want_bool(const ConfigValue& v, const std::string& key) {
    if (const bool* b = std::get_if<bool>(&v)) return *b;
    throw ConfigError("config key '" + key + "' must be true or false");
}

inline std::string want_string(const ConfigValue& v, const std::string& key) {
    if (const std::string* s = std::get_if<std::string>(&v)) return *s;
    throw ConfigError("config key '" + key + "' must be a quoted string");
}

inline std::vector<double> want_list(const ConfigValue& v, const std::string& key) {
    if (const auto* l = std::get_if<std::vector<double>>(&v)) return *l;
    throw ConfigError("config key '" + key + "' must be a [list]");
}

} // namespace detail

/// Apply a parsed key/value document on top of a RunConfig. Unknown keys
/// are errors: typos must not silently change a sweep.
inline void apply_kv(RunConfig& cfg, const KeyValues& kv) {
    using namespace detail;
    bool saw_detuning = false, saw_drive = false;
    double drive_freq = 0.0;
    for (const auto& [key, value] : kv) {
        if (key == "omega") cfg.params.omega = want_number(value, key);
        else if (key == "detuning") { cfg.params.detuning = want_number(value, key); saw_detuning = true; }
        else if (key == "drive_freq") { drive_freq = want_number(value, key); saw_drive = true; }
        else if (key == "chi") cfg.params.chi = want_number(value, key);
        else if (key == "n_s") cfg.params.n_s = want_number(value, key);
        else if (key == "alpha") cfg.params.alpha = want_number(value, key);
        else if (key == "gamma") cfg.params.gamma = want_number(value, key);
        else if (key == "dim") cfg.params.dim = static_cast<int>(want_number(value, key));
        else if (key == "tau_start") cfg.tau_grid.start = want_number(value, key);
        else if (key == "tau_max") cfg.tau_grid.stop = want_number(value, key);
        else if (key == "tau_points") cfg.tau_grid.points = static_cast<long>(want_number(value, key));
        else if (key == "tau_grid") cfg.tau_grid.explicit_grid = want_list(value, key);
        else if (key == "sweep_param") {
            if (!cfg.sweep) cfg.sweep.emplace();
            cfg.sweep->param = want_string(value, key);
        } else if (key == "sweep_values") {
            if (!cfg.sweep) cfg.sweep.emplace();
            cfg.sweep->values = want_list(value, key);
        } else if (key == "out_dir") cfg.out_dir = want_string(value, key);
        else if (key == "format") {
            const std::string f = want_string(value, key);
            if (f == "csv") cfg.format = OutputFormat::Csv;
            else if (f == "json") cfg.format = OutputFormat::Json;
            else throw ConfigError("config key 'format' must be \"csv\" or \"json\"");
        } else if (key == "jobs") cfg.jobs = static_cast<int>(want_number(value, key));
        else if (key == "include_kerr") cfg.include_kerr = want_bool(value, key);
        else if (key == "snapshot_times") cfg.snapshot_times = want_list(value, key);
        else if (key == "wigner_extent") cfg.wigner_extent = want_number(value, key);
        else if (key == "wigner_points") cfg.wigner_points = static_cast<int>(want_number(value, key));
        else if (key == "gammas") cfg.gammas = want_list(value, key);
        else if (key == "compare_max") cfg.compare_max = want_bool(value, key);
        else if (key == "rtol") cfg.rtol = want_number(value, key);
        else if (key == "propagator") {
            const std::string m = want_string(value, key);
            if (m == "rk45") cfg.use_expm = false;
            else if (m == "expm") cfg.use_expm = true;
            else throw ConfigError("config key 'propagator' must be \"rk45\" or \"expm\"");
        } else if (key == "truncation_check") cfg.truncation_check = want_bool(value, key);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    if (saw_drive) {
        const double implied = cfg.params.omega - drive_freq;
        if (saw_detuning && std::abs(implied - cfg.params.detuning) > 1e-12)
            throw ConfigError("detuning and drive_freq are inconsistent: detuning = omega - drive_freq");
        cfg.params.detuning = implied;
    }
}

} // namespace config
} // namespace satqb
