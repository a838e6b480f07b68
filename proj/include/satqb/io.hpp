#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "satqb/dynamics.hpp"
#include "satqb/model.hpp"
#include "satqb/observables.hpp"

namespace satqb::io {

/// Fixed 17-significant-digit formatting: deterministic and round-trip safe.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Shortest round-trip form, used for values embedded in file names.
inline std::string compact_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return format_double(v);
    return std::string(buf, ptr);
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(const std::vector<std::string>& cells) {
        if (cells.size() != header_.size())
            throw Error("CsvWriter: row width does not match header");
        rows_.push_back(cells);
    }

    std::string str() const {
        std::string out = join(header_);
        for (const auto& r : rows_) out += join(r);
        return out;
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot open " + path.string() + " for writing");
        f << str();
        if (!f) throw Error("write failed for " + path.string());
    }

private:
    static std::string join(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ',';
            line += cells[i];
        }
        line += '\n';
        return line;
    }
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw Error("write failed for " + path.string());
}

/// Every artifact gets a `<name>.meta.json` sidecar holding the fully
/// resolved configuration that produced it.
inline void write_sidecar(const std::filesystem::path& artifact, const nlohmann::json& meta) {
    std::filesystem::path p = artifact;
    p += ".meta.json";
    write_text(p, meta.dump(2) + "\n");
}

inline CsvWriter spectrum_csv(bool with_kerr) {
    std::vector<std::string> header{"n_s", "n", "E_n"};
    if (with_kerr) header.push_back("E_n_kerr");
    return CsvWriter(std::move(header));
}

inline void append_spectrum_rows(CsvWriter& csv, double n_s, const SpectrumTable& t) {
    for (std::size_t i = 0; i < t.n.size(); ++i) {
        std::vector<std::string> row{format_double(n_s), std::to_string(t.n[i]),
                                     format_double(t.E_n[i])};
        if (t.E_n_kerr) row.push_back(format_double((*t.E_n_kerr)[i]));
        csv.add_row(row);
    }
}

inline CsvWriter trajectory_csv(const TrajectoryRecord& rec) {
    CsvWriter csv({"tau", "energy", "ergotropy", "trace_err", "min_eig", "purity"});
    for (std::size_t k = 0; k < rec.times.size(); ++k)
        csv.add_row({format_double(rec.times[k]), format_double(rec.energy[k]),
                     format_double(rec.ergotropy[k]), format_double(rec.trace_err[k]),
                     format_double(rec.min_eig[k]), format_double(rec.purity[k])});
    return csv;
}

inline CsvWriter wigner_csv(const WignerGrid& grid) {
    CsvWriter csv({"re_beta", "im_beta", "W"});
    for (Eigen::Index i = 0; i < grid.re_beta.size(); ++i)
        for (Eigen::Index j = 0; j < grid.im_beta.size(); ++j)
            csv.add_row({format_double(grid.re_beta(i)), format_double(grid.im_beta(j)),
                         format_double(grid.values(i, j))});
    return csv;
}

/// Compact JSON form of a Wigner grid: axes plus row-major values.
inline nlohmann::json wigner_json(const WignerGrid& grid) {
    nlohmann::json j;
    j["re_beta"] = std::vector<double>(grid.re_beta.data(),
                                       grid.re_beta.data() + grid.re_beta.size());
    j["im_beta"] = std::vector<double>(grid.im_beta.data(),
                                       grid.im_beta.data() + grid.im_beta.size());
    std::vector<std::vector<double>> rows;
    rows.reserve(grid.values.rows());
    for (Eigen::Index i = 0; i < grid.values.rows(); ++i) {
        std::vector<double> r(grid.values.cols());
        for (Eigen::Index j2 = 0; j2 < grid.values.cols(); ++j2) r[j2] = grid.values(i, j2);
        rows.push_back(std::move(r));
    }
    j["values"] = rows;
    j["min_W"] = grid.min_value();
    j["grid_mass"] = grid.grid_mass();
    return j;
}

/// Rows of a trajectory as JSON (the --format json path).
inline nlohmann::json trajectory_json(const TrajectoryRecord& rec) {
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t k = 0; k < rec.times.size(); ++k)
        j.push_back({{"tau", rec.times[k]},
                     {"energy", rec.energy[k]},
                     {"ergotropy", rec.ergotropy[k]},
                     {"trace_err", rec.trace_err[k]},
                     {"min_eig", rec.min_eig[k]},
                     {"purity", rec.purity[k]}});
    return j;
}

} // namespace satqb::io
