#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "otoc/commands.hpp"

namespace otoc::cli {

inline const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig1", "fig2a", "fig2b", "fig3", "fig4",
                                              "fig5", "fig6", "fig7", "fig8"};
    return ids;
}

/// A comparison of one derived quantity against its target. `criterion` is the acceptance
/// criterion number, or 0 for trend checks that do not gate the exit code.
struct Check {
    std::string name;
    int criterion = 0;
    json value;
    std::string target;
    bool pass = false;

    json to_json() const {
        return {{"name", name},
                {"criterion", criterion ? json(criterion) : json(nullptr)},
                {"value", value},
                {"target", target},
                {"pass", pass}};
    }
};

using Outputs = std::map<std::string, CommandOutput>;

namespace detail {

inline const json* find_run(const json& summary, const std::string& point,
                            std::optional<int> n_p = std::nullopt) {
    for (const auto& r : summary.at("runs")) {
        if (r.at("point") == point && (!n_p || r.at("n_p") == *n_p)) return &r;
    }
    return nullptr;
}

inline bool within_rel(double v, double target, double rel) {
    return std::isfinite(v) && std::abs(v - target) <= rel * std::abs(target);
}

inline double fitted_rate(const json& run) {
    if (!run.contains("fit") || run.at("fit").is_null()) return std::nan("");
    return run.at("fit").at("rate").get<double>();
}

inline const json& summary_of(const Outputs& o, const std::string& cmd) {
    const auto it = o.find(cmd);
    if (it == o.end()) fail(ErrorKind::Config, "figure config does not run '" + cmd + "'");
    return it->second.summary;
}

inline double t_of(const json& v) {
    return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

/// Centroid within 5% of the classical point for every snapshot before t_p, skipping runs
/// whose classical point is the origin.
inline Check centroid_check(const json& husimi) {
    Check c{"Husimi centroid tracks the classical trajectory before t_p", 7, json::array(),
            "relative error <= 5%", true};
    int used = 0;
    for (const auto& r : husimi.at("runs")) {
        for (const auto& sn : r.at("snapshots")) {
            if (!sn.value("before_t_p", false)) continue;
            const json& err = sn.value("centroid_rel_error", json(nullptr));
            if (err.is_null() && sn.contains("centroid") && !sn.at("centroid").is_null()) continue;
            const double e = err.is_null() ? INFINITY : err.get<double>();
            c.value.push_back({{"point", r.at("point")}, {"t", sn.at("t")}, {"rel_error", err}});
            c.pass = c.pass && e <= 0.05;
            ++used;
        }
    }
    c.pass = c.pass && used > 0;
    return c;
}

inline Check initial_norm_check(const json& husimi) {
    Check c{"Husimi norm of initial packets", 7, json::array(), "1 +- 1e-3", true};
    for (const auto& r : husimi.at("runs")) {
        for (const auto& sn : r.at("snapshots")) {
            if (sn.at("t").get<double>() != 0.0) continue;
            const double n = sn.at("norm").get<double>();
            c.value.push_back({{"point", r.at("point")}, {"norm", n}});
            c.pass = c.pass && std::abs(n - 1.0) <= 1e-3;
        }
    }
    c.pass = c.pass && !c.value.empty();
    return c;
}

inline std::vector<Check> checks_fig1(const ExperimentConfig&, const Outputs& o, json& q) {
    const json& s = summary_of(o, "portrait");
    std::vector<Check> out;
    Check lam{"lambda_O (tangent method, every non-saddle seed)", 5, json::object(), "1.000 +- 1e-3", true};
    for (const auto& r : s.at("runs")) {
        if (r.at("region") == "SADDLE" || !r.contains("lyapunov")) continue;
        const double e = r.at("lyapunov").at("exponent").get<double>();
        lam.value[r.at("point").get<std::string>()] = e;
        lam.pass = lam.pass && std::abs(e - 1.0) <= 1e-3;
        if (!q.contains("lambda_O")) q["lambda_O"] = e;
    }
    lam.pass = lam.pass && !lam.value.empty();
    out.push_back(lam);
    if (const json* a = find_run(s, "A")) {
        const double d = a->at("end_distance_to_saddle").get<double>();
        const double d0 = std::hypot(a->at("q").get<double>(), a->at("p").get<double>());
        out.push_back({"A converges to O", 0, d, "end distance < 0.1 |A|", d < 0.1 * d0});
    }
    json regions = json::object();
    for (const auto& r : s.at("runs")) regions[r.at("point").get<std::string>()] = r.at("region");
    q["iho_regions"] = regions;
    return out;
}

inline std::vector<Check> checks_fig2a(const ExperimentConfig& cfg, const Outputs& o, json& q) {
    const json& s = summary_of(o, "photon");
    std::vector<Check> out;
    for (const auto& pt : cfg.points) {
        Check c{"t_p increasing in N_p at " + pt.name, 6, json::object(), "t_p strictly increasing", true};
        double prev = -1.0;
        for (int n : cfg.n_p) {
            const json* r = find_run(s, pt.name, n);
            const json tp = r ? r->value("t_p", json(nullptr)) : json(nullptr);
            c.value[std::to_string(n)] = tp;
            const double t = tp.is_null() ? std::nan("") : tp.get<double>();
            c.pass = c.pass && std::isfinite(t) && t > prev;
            prev = std::isfinite(t) ? t : prev;
            if (r && r->contains("reference")) {
                q["t_p"][pt.name][std::to_string(n)] = {{"t_p", tp}, {"reference", r->at("reference")}};
            }
        }
        out.push_back(c);
    }
    return out;
}

inline std::vector<Check> checks_fig2b(const ExperimentConfig&, const Outputs& o, json&) {
    const json& s = summary_of(o, "photon");
    std::vector<Check> out;
    for (const char* name : {"A", "D"}) {
        if (const json* r = find_run(s, name)) {
            out.push_back({std::string("mean photon at ") + name + " decreases first", 0,
                           {{"initial", r->at("initial")}, {"min", r->at("min")}, {"t_min", r->at("t_min")}},
                           "decreases then increases",
                           r->at("decreases_first").get<bool>() && r->at("t_min").get<double>() > 0.0});
        }
    }
    return out;
}

inline std::vector<Check> checks_fig3(const ExperimentConfig& cfg, const Outputs& o, json& q) {
    const json& s = summary_of(o, "otoc");
    std::vector<Check> out;
    for (const auto& pt : cfg.points) {
        json rates = json::object(), durations = json::object();
        double lo = INFINITY, hi = -INFINITY, prev = -1.0;
        bool ok_rates = true, ok_dur = true;
        for (int n : cfg.n_p) {
            const json* r = find_run(s, pt.name, n);
            const double rate = r ? fitted_rate(*r) : std::nan("");
            rates[std::to_string(n)] = std::isfinite(rate) ? json(rate) : json(nullptr);
            ok_rates = ok_rates && std::isfinite(rate);
            lo = std::min(lo, rate);
            hi = std::max(hi, rate);
            const json d = r ? r->value("correspondence_time", json(nullptr)) : json(nullptr);
            durations[std::to_string(n)] = d;
            const double t = d.is_null() ? std::nan("") : d.get<double>();
            ok_dur = ok_dur && std::isfinite(t) && t > prev;
            prev = std::isfinite(t) ? t : prev;
        }
        const double spread = ok_rates ? (hi - lo) / lo : std::nan("");
        out.push_back({"early rates agree across N_p at " + pt.name, 3,
                       {{"rates", rates}, {"relative_spread", spread}}, "spread <= 5%",
                       ok_rates && spread <= 0.05});
        out.push_back({"exponential duration increasing in N_p at " + pt.name, 3, durations,
                       "strictly increasing", ok_dur});
        q["rate_B"] = rates;
        q["exponential_duration_B"] = durations;
    }
    return out;
}

inline std::vector<Check> checks_fig4(const ExperimentConfig& cfg, const Outputs& o, json& q) {
    const auto& out_otoc = o.at("otoc");
    const json& s = out_otoc.summary;
    const int n_p = cfg.n_p.front();
    std::vector<Check> out;
    Check rates{"IHO growth rate equals 2 lambda_O", 2, json::object(), "2.00 +- 5% at O, A, D", true};
    for (const char* name : {"O", "A", "D"}) {
        const json* r = find_run(s, name, n_p);
        const double rate = r ? fitted_rate(*r) : std::nan("");
        rates.value[name] = std::isfinite(rate) ? json(rate) : json(nullptr);
        rates.pass = rates.pass && within_rel(rate, 2.0, 0.05);
    }
    out.push_back(rates);
    json all_rates = json::object();
    for (const auto& r : s.at("runs")) {
        const double rate = fitted_rate(r);
        all_rates[r.at("point").get<std::string>()] = std::isfinite(rate) ? json(rate) : json(nullptr);
        if (r.contains("reference")) q["reference_n_p"][r.at("point").get<std::string>()] = r.at("reference").at("n_p");
    }
    q["rate"] = all_rates;
    if (const json* r = find_run(s, "O", n_p); r && !r->at("fit").is_null()) {
        q["rate_O"] = fitted_rate(*r);
        q["tau_O"] = r->at("ehrenfest_time");
    }

    const std::string key_o = "otoc:" + std::string("O_np") + std::to_string(n_p);
    const double t_lim = std::log(static_cast<double>(n_p)) / 2.0;
    Check agree{"O, A, D curves coincide before ln(N_p)/2", 2, json::object(), "pointwise within 2%", true};
    const auto it_o = out_otoc.series.find(key_o);
    agree.pass = it_o != out_otoc.series.end();
    for (const char* name : {"A", "D"}) {
        const auto it = out_otoc.series.find("otoc:" + std::string(name) + "_np" + std::to_string(n_p));
        if (!agree.pass || it == out_otoc.series.end()) {
            agree.pass = false;
            continue;
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < it->second.size() && it->second.time(i) < t_lim; ++i) {
            const double ref = it_o->second.value(i);
            worst = std::max(worst, std::abs(it->second.value(i) - ref) / std::abs(ref));
        }
        agree.value[name] = worst;
        agree.pass = agree.pass && worst <= 0.02;
    }
    out.push_back(agree);
    return out;
}

inline std::vector<Check> checks_fig5(const ExperimentConfig& cfg, const Outputs& o, json& q) {
    const json& s = summary_of(o, "husimi");
    std::vector<Check> out;
    const int n_p = cfg.n_p.front();
    const double tau = std::log(static_cast<double>(n_p)) / 2.0;
    if (const json* r = find_run(s, "O", n_p)) {
        Check frag{"fragmentation after tau at O", 8, json::array(), ">= 2 maxima for t > tau; 1 for t <= tau/2", true};
        bool late = false;
        for (const auto& sn : r->at("snapshots")) {
            const double t = sn.at("t").get<double>();
            const int m = sn.at("local_maxima").get<int>();
            frag.value.push_back({{"t", t}, {"local_maxima", m}});
            if (t > tau) {
                late = true;
                frag.pass = frag.pass && m >= 2;
            } else if (t <= 0.5 * tau) {
                frag.pass = frag.pass && m == 1;
            }
        }
        frag.pass = frag.pass && late;
        out.push_back(frag);
        q["tau_O_a_priori"] = tau;
    }
    out.push_back(centroid_check(s));
    out.push_back(initial_norm_check(s));
    return out;
}

inline std::vector<Check> checks_fig6(const ExperimentConfig& cfg, const Outputs& o, json& q) {
    const json& s = summary_of(o, "portrait");
    std::vector<Check> out;
    if (const json* t = find_run(s, "T")) {
        const auto& ev = t->at("jacobian_eigenvalues");
        const bool exact = ev[0][0].get<double>() == cfg.gamma && ev[1][0].get<double>() == -cfg.gamma &&
                           ev[0][1].get<double>() == 0.0 && ev[1][1].get<double>() == 0.0;
        out.push_back({"Jacobian eigenvalues at T equal +-gamma", 5, ev, "exactly +-gamma", exact});
        q["lambda_T_jacobian"] = ev[0][0];
    }
    const auto sys = cfg.classical_system();
    const auto est = lyapunov_tangent(sys, {1e-6, 0.0}, 4.0, cfg.classical_dt, 10);
    out.push_back({"Benettin exponent at displaced T (1e-6, 0), t_total = 4", 5, est.exponent,
                   "gamma +- 1e-2", std::abs(est.exponent - cfg.gamma) <= 1e-2});
    q["lambda_T"] = est.exponent;
    if (const json* f = find_run(s, "F")) {
        const double lf = f->at("lyapunov").at("exponent").get<double>();
        out.push_back({"classical exponent at F", 4, lf, "0 +- 1e-2", std::abs(lf) <= 1e-2});
        q["lambda_F"] = lf;
        if (f->contains("return_distance")) {
            out.push_back({"F lies on a closed orbit", 0,
                           {{"period", f->at("period")}, {"return_distance", f->at("return_distance")}},
                           "return distance < 1e-3", f->at("return_distance").get<double>() < 1e-3});
        }
    }
    return out;
}

inline std::vector<Check> checks_fig7(const ExperimentConfig& cfg, const Outputs& o, json& q) {
    const json& s = summary_of(o, "otoc");
    const int n_p = cfg.n_p.front();
    std::vector<Check> out;
    if (const json* f = find_run(s, "F", n_p)) {
        const double rate = fitted_rate(*f);
        out.push_back({"fitted OTOC rate at F", 4, f->at("fit"), "25.52 +- 15%", within_rel(rate, 25.52, 0.15)});
        const double tau = std::isfinite(rate) && rate > 0.0 ? ehrenfest_time(rate, n_p) : std::nan("");
        out.push_back({"Ehrenfest time at F", 4, std::isfinite(tau) ? json(tau) : json(nullptr),
                       "0.22 +- 15%", within_rel(tau, 0.22, 0.15)});
        q["rate_F"] = std::isfinite(rate) ? json(rate) : json(nullptr);
        q["tau_F"] = std::isfinite(tau) ? json(tau) : json(nullptr);
    }
    const auto lf = lyapunov_tangent(cfg.classical_system(), {8.0, 9.0}, 200.0, cfg.classical_dt, 10);
    out.push_back({"classical exponent at F", 4, lf.exponent, "0 +- 1e-2", std::abs(lf.exponent) <= 1e-2});
    if (const json* t = find_run(s, "T", n_p)) {
        q["rate_T"] = t->at("fit");
    }
    return out;
}

inline std::vector<Check> checks_fig8(const ExperimentConfig& cfg, const Outputs& o, json& q) {
    const json& s = summary_of(o, "husimi");
    std::vector<Check> out;
    out.push_back(centroid_check(s));
    out.push_back(initial_norm_check(s));
    if (const json* f = find_run(s, "F", cfg.n_p.front())) {
        const json& sn = f->at("snapshots");
        double vq0 = 0.0, vp0 = 0.0, rq = 0.0, rp = 0.0;
        bool ok = !sn.empty() && sn[0].contains("moments") && sn[0].at("t").get<double>() == 0.0;
        if (ok) {
            vq0 = sn[0].at("moments").at("var_q").get<double>();
            vp0 = sn[0].at("moments").at("var_p").get<double>();
        }
        for (const auto& x : sn) {
            if (!ok || x.at("t").get<double>() > 0.22 || !x.contains("moments")) continue;
            rq = std::max(rq, x.at("moments").at("var_q").get<double>() / vq0);
            rp = std::max(rp, x.at("moments").at("var_p").get<double>() / vp0);
        }
        out.push_back({"F packet spreads along p", 0, {{"var_p_growth", rp}, {"var_q_growth", rq}},
                       "var_p grows > 4x, var_q < 2x within t <= 0.22", ok && rp > 4.0 && rq < 2.0});
        q["husimi_F_growth"] = {{"var_p", rp}, {"var_q", rq}};
    }
    return out;
}

}  // namespace detail

inline std::vector<Check> figure_checks(const std::string& fig, const ExperimentConfig& cfg,
                                        const Outputs& o, json& quantities) {
    if (fig == "fig1") return detail::checks_fig1(cfg, o, quantities);
    if (fig == "fig2a") return detail::checks_fig2a(cfg, o, quantities);
    if (fig == "fig2b") return detail::checks_fig2b(cfg, o, quantities);
    if (fig == "fig3") return detail::checks_fig3(cfg, o, quantities);
    if (fig == "fig4") return detail::checks_fig4(cfg, o, quantities);
    if (fig == "fig5") return detail::checks_fig5(cfg, o, quantities);
    if (fig == "fig6") return detail::checks_fig6(cfg, o, quantities);
    if (fig == "fig7") return detail::checks_fig7(cfg, o, quantities);
    if (fig == "fig8") return detail::checks_fig8(cfg, o, quantities);
    return {};
}

struct ReproduceResult {
    json report;
    bool primary_pass = true;
};

/// Runs each bundled figure config (or only `only`) into out_root/<figure>/ and writes
/// out_root/report.json. Per-figure failures are recorded, not thrown.
inline ReproduceResult reproduce_all(const std::filesystem::path& config_dir,
                                     const std::filesystem::path& out_root,
                                     const std::string& only = {}) {
    std::vector<std::string> figs;
    for (const auto& f : figure_ids()) {
        if (only.empty() || only == f) figs.push_back(f);
    }
    if (figs.empty()) {
        std::string list;
        for (const auto& f : figure_ids()) list += (list.empty() ? "" : ", ") + f;
        fail(ErrorKind::Config, "--only " + only + " is not a bundled figure (" + list + ")");
    }

    ReproduceResult res;
    json figures = json::object();
    json quantities = json::object();
    for (const auto& fig : figs) {
        json entry;
        Workspace ws;
        try {
            const auto cfg = load_config(config_dir / (fig + ".json"));
            validate(cfg);
            if (cfg.commands.empty()) fail(ErrorKind::Config, fig + ".json lists no commands");
            io::OutputDir out(out_root / fig, config_hash(cfg));
            out.write("config.json", serialize_config(cfg));
            Outputs outputs;
            for (const auto& cmd : cfg.commands) outputs[cmd] = run_command(cmd, cfg, out, ws);
            json q = json::object();
            const auto checks = figure_checks(fig, cfg, outputs, q);
            json arr = json::array();
            bool fig_pass = true;
            for (const auto& c : checks) {
                arr.push_back(c.to_json());
                if (c.criterion != 0 && !c.pass) fig_pass = false;
            }
            entry = {{"status", "ok"}, {"checks", arr}, {"primary_pass", fig_pass}};
            for (const auto& [k, v] : q.items()) quantities[k] = v;
            res.primary_pass = res.primary_pass && fig_pass;
        } catch (const Error& e) {
            entry = {{"status", "error"},
                     {"error", {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}}},
                     {"primary_pass", false}};
            res.primary_pass = false;
        }
        figures[fig] = entry;
    }
    res.report = {{"figures", figures},
                  {"quantities", quantities},
                  {"primary_pass", res.primary_pass},
                  {"versions", io::module_versions()}};
    io::write_text(out_root / "report.json", io::json_text(res.report));
    return res;
}

}  // namespace otoc::cli
