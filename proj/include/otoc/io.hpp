#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "otoc/error.hpp"
#include "otoc/husimi.hpp"

#ifndef OTOC_VERSION
#define OTOC_VERSION "1.0.0"
#endif

namespace otoc::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// %.17g; NaN is written as an empty field by the CSV writer.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Config, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) fail(ErrorKind::Config, "write failed for " + path.string());
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Config, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Column-major CSV with a header row.
inline std::string csv_text(const std::vector<std::string>& header,
                            const std::vector<std::vector<double>>& columns) {
    require(header.size() == columns.size() && !columns.empty(), ErrorKind::InvalidArgument,
            "csv header/column count mismatch");
    const std::size_t rows = columns.front().size();
    for (const auto& c : columns) {
        require(c.size() == rows, ErrorKind::InvalidArgument, "csv columns differ in length");
    }
    std::string s;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (k) s += ',';
        s += header[k];
    }
    s += '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < columns.size(); ++k) {
            if (k) s += ',';
            if (!std::isnan(columns[k][r])) s += format_double(columns[k][r]);
        }
        s += '\n';
    }
    return s;
}

/// Two header lines, then one line of n_p values per q row.
///   # q_min q_max n_q p_min p_max n_p
///   # -20 20 201 -20 20 201
inline std::string grid_text(const HusimiGrid& hg) {
    const auto& g = hg.grid();
    std::string s = "# q_min q_max n_q p_min p_max n_p\n# ";
    s += format_double(g.q_min) + ' ' + format_double(g.q_max) + ' ' + std::to_string(g.n_q) +
         ' ' + format_double(g.p_min) + ' ' + format_double(g.p_max) + ' ' +
         std::to_string(g.n_p) + '\n';
    for (int i = 0; i < g.n_q; ++i) {
        for (int j = 0; j < g.n_p; ++j) {
            if (j) s += ' ';
            s += format_double(hg.value(i, j));
        }
        s += '\n';
    }
    return s;
}

inline HusimiGrid parse_grid(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    require(line.size() > 2 && line[0] == '#', ErrorKind::Config, "grid file lacks axis header");
    std::istringstream head(line.substr(1));
    PhaseGrid g;
    head >> g.q_min >> g.q_max >> g.n_q >> g.p_min >> g.p_max >> g.n_p;
    require(static_cast<bool>(head), ErrorKind::Config, "malformed grid header");
    g.validate();
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(g.n_q) * g.n_p);
    double x = 0.0;
    while (in >> x) v.push_back(x);
    return HusimiGrid(g, std::move(v));
}

/// Sorted keys (std::map-backed objects), two-space indent, trailing LF.
inline std::string json_text(const json& j) { return j.dump(2) + '\n'; }

/// FNV-1a 64-bit, hex encoded.
inline std::string fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline json module_versions() {
    return {{"otoc_lab", OTOC_VERSION},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
#ifdef OTOC_USE_LAPACKE
            {"eigensolver", "lapacke"}};
#else
            {"eigensolver", "eigen"}};
#endif
}

inline constexpr const char* kManifestName = "manifest.jsonl";

/// Writes output files under one directory and appends one manifest line per file.
/// Not thread-safe: a command owns a single writer.
class OutputDir {
public:
    OutputDir(fs::path root, std::string config_hash)
        : root_(std::move(root)), hash_(std::move(config_hash)),
          start_(std::chrono::steady_clock::now()) {
        fs::create_directories(root_);
    }

    const fs::path& root() const noexcept { return root_; }
    const std::vector<std::string>& written() const noexcept { return written_; }

    void write(const std::string& name, const std::string& text) {
        write_text(root_ / name, text);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json entry = {{"file", name},
                      {"config_hash", hash_},
                      {"versions", module_versions()},
                      {"wall_time_s", wall}};
        std::ofstream m(root_ / kManifestName, std::ios::binary | std::ios::app);
        m << entry.dump() << '\n';
        written_.push_back(name);
    }

    void csv(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<double>>& columns) {
        write(name, csv_text(header, columns));
    }
    void json_file(const std::string& name, const json& j) { write(name, json_text(j)); }
    void grid(const std::string& name, const HusimiGrid& hg) { write(name, grid_text(hg)); }

private:
    fs::path root_;
    std::string hash_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> written_;
};

}  // namespace otoc::io
