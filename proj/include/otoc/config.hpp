#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "otoc/classical.hpp"
#include "otoc/error.hpp"
#include "otoc/fock.hpp"
#include "otoc/husimi.hpp"
#include "otoc/io.hpp"

namespace otoc {

using nlohmann::json;

struct NamedPoint {
    std::string name;
    double q = 0.0;
    double p = 0.0;
    friend bool operator==(const NamedPoint&, const NamedPoint&) = default;
};

struct TimeGrid {
    double t_end = 1.0;
    int n_samples = 101;
    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

struct HusimiSpec {
    std::optional<PhaseGrid> grid;  ///< per-system default when absent
    std::vector<double> snapshots;
    friend bool operator==(const HusimiSpec&, const HusimiSpec&) = default;
};

struct FitSpec {
    enum class Mode { Default, Window, Auto };
    Mode mode = Mode::Default;
    double lo = 0.0, hi = 0.0;                 ///< Window
    double min_span = 0.08;                    ///< Auto
    double bound_lo = 0.0, bound_hi = 0.25;    ///< Auto
    friend bool operator==(const FitSpec&, const FitSpec&) = default;
};

struct ExperimentConfig {
    std::string figure = "custom";
    std::vector<std::string> commands;  ///< pipelines run by reproduce-all
    SystemKind system = SystemKind::IHO;
    double gamma = 3.0;                 ///< HIHO only
    double g = 1.0 / 25.0;              ///< HIHO only
    std::vector<int> n_p{300};
    std::vector<NamedPoint> points;
    TimeGrid time_grid;
    std::optional<HusimiSpec> husimi;
    FitSpec fit;
    double epsilon = 0.02;              ///< correspondence tolerance
    int reference_factor = 4;           ///< 0 disables the large-D reference
    double classical_dt = 1e-3;
    bool oracle = false;
    std::string output_dir;
    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

    HihoParams hiho() const { return HihoParams::make(gamma, g); }
    HamSystem classical_system() const {
        return system == SystemKind::IHO ? HamSystem::iho() : HamSystem::hiho(hiho());
    }
};

inline const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> k{"portrait", "photon", "otoc", "husimi"};
    return k;
}

inline PhaseGrid default_husimi_grid(SystemKind s) {
    if (s == SystemKind::IHO) return {-20.0, 20.0, 201, -20.0, 20.0, 201};
    return {-15.0, 15.0, 201, -40.0, 40.0, 201};
}

/// Fit window used when the config says "default": IHO [0.5, 0.8 tau] with tau = ln(N_p)/2;
/// HIHO auto window of span >= 0.08 inside [0, 0.25].
inline FitSpec resolve_fit(const ExperimentConfig& cfg, int n_p) {
    if (cfg.fit.mode != FitSpec::Mode::Default) return cfg.fit;
    FitSpec f;
    if (cfg.system == SystemKind::IHO) {
        f.mode = FitSpec::Mode::Window;
        f.lo = 0.5;
        f.hi = 0.8 * std::log(static_cast<double>(n_p)) / 2.0;
    } else {
        f.mode = FitSpec::Mode::Auto;
    }
    return f;
}

namespace detail {

inline void config_fail(const std::string& msg) { fail(ErrorKind::Config, msg); }

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) config_fail("unknown key '" + k + "' in " + where);
    }
}

template <typename T>
T get_as(const json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        config_fail("'" + key + "' in " + where + " is missing or has the wrong type");
    }
    return T{};
}

inline json grid_to_json(const PhaseGrid& g) {
    return {{"q", {g.q_min, g.q_max, g.n_q}}, {"p", {g.p_min, g.p_max, g.n_p}}};
}

inline PhaseGrid grid_from_json(const json& j) {
    check_keys(j, {"q", "p"}, "husimi.grid");
    auto axis = [&](const char* k, double& lo, double& hi, int& n) {
        const json& a = j.at(k);
        if (!a.is_array() || a.size() != 3) {
            config_fail(std::string("husimi.grid.") + k + " must be [min, max, points]");
        }
        lo = a[0].get<double>();
        hi = a[1].get<double>();
        n = a[2].get<int>();
    };
    if (!j.contains("q") || !j.contains("p")) config_fail("husimi.grid needs both 'q' and 'p'");
    PhaseGrid g;
    axis("q", g.q_min, g.q_max, g.n_q);
    axis("p", g.p_min, g.p_max, g.n_p);
    return g;
}

}  // namespace detail

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["figure"] = c.figure;
    j["commands"] = c.commands;
    j["system"] = to_string(c.system);
    if (c.system == SystemKind::HIHO) j["hiho_params"] = {{"gamma", c.gamma}, {"g", c.g}};
    j["n_p"] = c.n_p;
    j["points"] = json::array();
    for (const auto& pt : c.points) j["points"].push_back({{"name", pt.name}, {"q", pt.q}, {"p", pt.p}});
    j["time_grid"] = {{"t_end", c.time_grid.t_end}, {"n_samples", c.time_grid.n_samples}};
    if (c.husimi) {
        json h{{"snapshots", c.husimi->snapshots}};
        if (c.husimi->grid) h["grid"] = detail::grid_to_json(*c.husimi->grid);
        j["husimi"] = h;
    }
    switch (c.fit.mode) {
        case FitSpec::Mode::Default: j["fit"] = "default"; break;
        case FitSpec::Mode::Window: j["fit"] = {{"window", {c.fit.lo, c.fit.hi}}}; break;
        case FitSpec::Mode::Auto:
            j["fit"] = {{"auto", {{"min_span", c.fit.min_span},
                                  {"bounds", {c.fit.bound_lo, c.fit.bound_hi}}}}};
            break;
    }
    j["epsilon"] = c.epsilon;
    j["reference_factor"] = c.reference_factor;
    j["classical_dt"] = c.classical_dt;
    j["oracle"] = c.oracle;
    j["output_dir"] = c.output_dir;
    return j;
}

/// Structural parse; semantic checks live in validate().
inline ExperimentConfig from_json(const json& j) {
    using detail::config_fail;
    using detail::get_as;
    if (!j.is_object()) config_fail("config must be a JSON object");
    detail::check_keys(j,
                       {"figure", "commands", "system", "hiho_params", "n_p", "points",
                        "initial_point", "time_grid", "husimi", "fit", "epsilon",
                        "reference_factor", "classical_dt", "oracle", "output_dir"},
                       "config");
    ExperimentConfig c;
    if (j.contains("figure")) c.figure = get_as<std::string>(j, "figure", "config");
    if (j.contains("commands")) c.commands = get_as<std::vector<std::string>>(j, "commands", "config");

    const auto sys = get_as<std::string>(j, "system", "config");
    if (sys == "IHO") {
        c.system = SystemKind::IHO;
        if (j.contains("hiho_params")) config_fail("'hiho_params' is only valid with system HIHO");
    } else if (sys == "HIHO") {
        c.system = SystemKind::HIHO;
        if (j.contains("hiho_params")) {
            const json& h = j.at("hiho_params");
            detail::check_keys(h, {"gamma", "g"}, "hiho_params");
            c.gamma = get_as<double>(h, "gamma", "hiho_params");
            c.g = get_as<double>(h, "g", "hiho_params");
        }
    } else {
        config_fail("system must be \"IHO\" or \"HIHO\", got \"" + sys + "\"");
    }

    if (j.contains("n_p")) {
        const json& n = j.at("n_p");
        if (n.is_number_integer()) c.n_p = {n.get<int>()};
        else c.n_p = get_as<std::vector<int>>(j, "n_p", "config");
    }

    if (j.contains("points") && j.contains("initial_point")) {
        config_fail("give either 'points' or 'initial_point', not both");
    }
    if (j.contains("initial_point")) {
        const auto ip = get_as<std::vector<double>>(j, "initial_point", "config");
        if (ip.size() != 2) config_fail("initial_point must be [q, p]");
        c.points = {{"P", ip[0], ip[1]}};
    }
    if (j.contains("points")) {
        for (const auto& pt : j.at("points")) {
            detail::check_keys(pt, {"name", "q", "p"}, "points[]");
            c.points.push_back({get_as<std::string>(pt, "name", "points[]"),
                                get_as<double>(pt, "q", "points[]"),
                                get_as<double>(pt, "p", "points[]")});
        }
    }

    if (j.contains("time_grid")) {
        const json& t = j.at("time_grid");
        detail::check_keys(t, {"t_end", "n_samples"}, "time_grid");
        c.time_grid.t_end = get_as<double>(t, "t_end", "time_grid");
        c.time_grid.n_samples = get_as<int>(t, "n_samples", "time_grid");
    }

    if (j.contains("husimi")) {
        const json& h = j.at("husimi");
        detail::check_keys(h, {"grid", "snapshots"}, "husimi");
        HusimiSpec hs;
        hs.snapshots = get_as<std::vector<double>>(h, "snapshots", "husimi");
        if (h.contains("grid")) hs.grid = detail::grid_from_json(h.at("grid"));
        c.husimi = hs;
    }

    if (j.contains("fit")) {
        const json& f = j.at("fit");
        if (f.is_string()) {
            const auto s = f.get<std::string>();
            if (s == "default") c.fit.mode = FitSpec::Mode::Default;
            else if (s == "auto") c.fit.mode = FitSpec::Mode::Auto;
            else config_fail("fit must be \"default\", \"auto\", {\"window\": [lo, hi]} or {\"auto\": {...}}");
        } else if (f.is_object() && f.contains("window")) {
            detail::check_keys(f, {"window"}, "fit");
            const auto w = get_as<std::vector<double>>(f, "window", "fit");
            if (w.size() != 2) config_fail("fit.window must be [lo, hi]");
            c.fit.mode = FitSpec::Mode::Window;
            c.fit.lo = w[0];
            c.fit.hi = w[1];
        } else if (f.is_object() && f.contains("auto")) {
            detail::check_keys(f, {"auto"}, "fit");
            const json& a = f.at("auto");
            detail::check_keys(a, {"min_span", "bounds"}, "fit.auto");
            c.fit.mode = FitSpec::Mode::Auto;
            if (a.contains("min_span")) c.fit.min_span = get_as<double>(a, "min_span", "fit.auto");
            if (a.contains("bounds")) {
                const auto b = get_as<std::vector<double>>(a, "bounds", "fit.auto");
                if (b.size() != 2) config_fail("fit.auto.bounds must be [lo, hi]");
                c.fit.bound_lo = b[0];
                c.fit.bound_hi = b[1];
            }
        } else {
            config_fail("fit must be \"default\", \"auto\", {\"window\": [lo, hi]} or {\"auto\": {...}}");
        }
    }

    if (j.contains("epsilon")) c.epsilon = get_as<double>(j, "epsilon", "config");
    if (j.contains("reference_factor")) c.reference_factor = get_as<int>(j, "reference_factor", "config");
    if (j.contains("classical_dt")) c.classical_dt = get_as<double>(j, "classical_dt", "config");
    if (j.contains("oracle")) c.oracle = get_as<bool>(j, "oracle", "config");
    if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j, "output_dir", "config");
    return c;
}

/// Smallest N_p whose truncation keeps the coherent tail below 1e-10.
inline int min_photons_for(const CoherentParams& cp) {
    int d = 2;
    while (coherent_tail(cp.beta_abs2(), d) >= kCoherentTailLimit) d += 1;
    return d - 1;
}

/// Semantic checks. Throws Config for malformed values and TailTooHeavy for initial points
/// outside the Fock support.
inline void validate(const ExperimentConfig& c) {
    using detail::config_fail;
    for (const auto& cmd : c.commands) {
        bool ok = false;
        for (const auto& k : known_commands()) ok = ok || cmd == k;
        if (!ok) config_fail("unknown command '" + cmd + "' (use portrait, photon, otoc, husimi)");
    }
    if (c.system == SystemKind::HIHO) {
        if (!(c.gamma > 0.0 && std::isfinite(c.gamma)) || !(c.g > 0.0 && std::isfinite(c.g))) {
            config_fail("hiho_params needs gamma > 0 and g > 0");
        }
    }
    if (c.n_p.empty()) config_fail("n_p must list at least one photon number");
    for (int n : c.n_p) {
        if (n < 1) config_fail("n_p must be >= 1, got " + std::to_string(n));
    }
    if (c.points.empty()) config_fail("no initial points / seeds given; add 'points' or use --point q,p");
    std::set<std::string> names;
    for (const auto& pt : c.points) {
        if (pt.name.empty()) config_fail("point names must be non-empty");
        if (pt.name.find_first_of("/\\ ") != std::string::npos) {
            config_fail("point name '" + pt.name + "' must not contain spaces or slashes");
        }
        if (!names.insert(pt.name).second) config_fail("duplicate point name '" + pt.name + "'");
        if (!std::isfinite(pt.q) || !std::isfinite(pt.p)) config_fail("point " + pt.name + " is not finite");
    }
    if (!(c.time_grid.t_end > 0.0)) config_fail("time_grid.t_end must be > 0");
    if (c.time_grid.n_samples < 2) config_fail("time_grid.n_samples must be >= 2");
    if (c.husimi) {
        if (c.husimi->snapshots.empty()) config_fail("husimi.snapshots must list at least one time");
        for (double t : c.husimi->snapshots) {
            if (!(t >= 0.0)) config_fail("husimi snapshot times must be >= 0");
        }
        if (c.husimi->grid) {
            try {
                c.husimi->grid->validate();
            } catch (const Error& e) {
                config_fail(std::string("husimi.grid: ") + e.what());
            }
        }
    }
    if (c.fit.mode == FitSpec::Mode::Window && !(c.fit.lo < c.fit.hi)) {
        config_fail("fit.window needs lo < hi");
    }
    if (c.fit.mode == FitSpec::Mode::Auto &&
        (!(c.fit.min_span > 0.0) || !(c.fit.bound_lo < c.fit.bound_hi))) {
        config_fail("fit.auto needs min_span > 0 and bounds lo < hi");
    }
    if (!(c.epsilon > 0.0)) config_fail("epsilon must be > 0");
    if (c.reference_factor != 0 && c.reference_factor < 2) {
        config_fail("reference_factor must be 0 (off) or >= 2");
    }
    if (!(c.classical_dt > 0.0)) config_fail("classical_dt must be > 0");

    for (const auto& pt : c.points) {
        const CoherentParams cp{pt.q, pt.p};
        for (int n : c.n_p) {
            if (coherent_tail(cp.beta_abs2(), n + 1) >= kCoherentTailLimit) {
                fail(ErrorKind::TailTooHeavy,
                     "point " + pt.name + " = (" + io::format_double(pt.q) + ", " +
                         io::format_double(pt.p) + ") needs N_p >= " +
                         std::to_string(min_photons_for(cp)) + ", config has N_p = " +
                         std::to_string(n));
            }
        }
    }
}

inline ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
    }
    try {
        return from_json(j);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("config has a value of the wrong type: ") + e.what());
    }
    return {};
}

inline std::string serialize_config(const ExperimentConfig& c) { return io::json_text(to_json(c)); }

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail(ErrorKind::Config, "config file not found: " + path.string());
    try {
        return parse_config(io::read_text(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) fail(ErrorKind::Config, path.string() + ": " + e.what());
        throw;
    }
}

/// FNV-1a of the canonical serialization.
inline std::string config_hash(const ExperimentConfig& c) { return io::fnv1a64(serialize_config(c)); }

inline constexpr const char* kOutputDirEnv = "OTOC_LAB_OUT";

/// Precedence: explicit override, then config output_dir, then $OTOC_LAB_OUT/<figure>,
/// then ./otoc-out/<figure>.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& c,
                                                const std::string& override_dir = {}) {
    if (!override_dir.empty()) return override_dir;
    if (!c.output_dir.empty()) return c.output_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
        return std::filesystem::path(env) / c.figure;
    }
    return std::filesystem::path("otoc-out") / c.figure;
}

}  // namespace otoc
