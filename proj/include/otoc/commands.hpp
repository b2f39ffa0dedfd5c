#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "otoc/analysis.hpp"
#include "otoc/classical.hpp"
#include "otoc/config.hpp"
#include "otoc/error.hpp"
#include "otoc/evolution.hpp"
#include "otoc/fock.hpp"
#include "otoc/husimi.hpp"
#include "otoc/io.hpp"

namespace otoc::cli {

using nlohmann::json;

/// Largest Fock dimension the reference doubling may reach.
inline constexpr int kMaxReferenceDim = 4801;
/// Oracle column is only computed for small spaces (O(D^3) per check time).
inline constexpr int kMaxOracleDim = 80;
inline constexpr int kOracleChecks = 6;

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::string run_id(const NamedPoint& pt, int n_p) {
    return pt.name + "_np" + std::to_string(n_p);
}

/// Propagators and observable series shared by every command run in one process.
class Workspace {
public:
    const Propagator& propagator(const ExperimentConfig& cfg, int dim) {
        const bool hiho = cfg.system == SystemKind::HIHO;
        const auto key = std::make_tuple(hiho, hiho ? cfg.gamma : 0.0, hiho ? cfg.g : 0.0, dim);
        auto it = props_.find(key);
        if (it == props_.end()) {
            const auto d = FockDim::from_dim(dim);
            const auto h = hiho ? build_hiho(d, cfg.hiho()) : build_iho(d);
            it = props_.emplace(key, std::make_unique<Propagator>(diagonalize(h))).first;
        }
        return *it->second;
    }

    const Observables& observables(const ExperimentConfig& cfg, const NamedPoint& pt, int n_p) {
        const std::string key = io::json_text(
            {to_string(cfg.system), cfg.gamma, cfg.g, pt.q, pt.p, n_p, cfg.time_grid.t_end,
             cfg.time_grid.n_samples});
        auto it = obs_.find(key);
        if (it == obs_.end()) {
            const auto dim = FockDim::from_photons(n_p);
            const auto& prop = propagator(cfg, dim.dim());
            const auto psi0 = coherent_state(dim, {pt.q, pt.p});
            const auto times = uniform_times(cfg.time_grid.t_end, cfg.time_grid.n_samples);
            it = obs_.emplace(key, observe(prop, psi0, times)).first;
        }
        return it->second;
    }

    /// Drops cached eigendecompositions above `dim` (they dominate memory).
    void release_above(int dim) {
        for (auto it = props_.begin(); it != props_.end();) {
            it = std::get<3>(it->first) > dim ? props_.erase(it) : std::next(it);
        }
    }

private:
    std::map<std::tuple<bool, double, double, int>, std::unique_ptr<Propagator>> props_;
    std::map<std::string, Observables> obs_;
};

struct CommandOutput {
    json summary;
    std::map<std::string, TimeSeries> series;  ///< "<kind>:<run id>"
};

enum class Track { Photon, Otoc };

inline const TimeSeries& tracked(const Observables& o, Track t) {
    return t == Track::Photon ? o.photon : o.otoc;
}

struct Reference {
    int n_p = 0;
    bool converged = false;
    double max_deviation = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> t_p;
    const Observables* obs = nullptr;
};

/// Large-D stand-in for the classical limit. Starts at reference_factor * N_p and doubles
/// until the reference agrees with the next doubling within epsilon/4 on [0, t_p] (the
/// whole grid if the run never departs). The reference must keep its truncation edge empty
/// on the same interval.
inline Reference converged_reference(Workspace& ws, const ExperimentConfig& cfg,
                                     const NamedPoint& pt, int n_p, const TimeSeries& run,
                                     Track track) {
    Reference ref;
    int m = cfg.reference_factor * n_p;
    double limit = cfg.time_grid.t_end;
    for (;;) {
        const Observables& r = ws.observables(cfg, pt, m);
        ref.n_p = m;
        ref.obs = &r;
        ref.t_p = correspondence_time(run, tracked(r, track), cfg.epsilon);
        limit = ref.t_p.value_or(cfg.time_grid.t_end);
        if (2 * m + 1 > kMaxReferenceDim) break;
        const Observables& chk = ws.observables(cfg, pt, 2 * m);
        const auto& a = tracked(r, track);
        const auto& b = tracked(chk, track);
        double dev = 0.0;
        for (std::size_t i = 0; i < a.size() && a.time(i) <= limit; ++i) {
            dev = std::max(dev, std::abs(a.value(i) - b.value(i)) / std::max(1.0, std::abs(b.value(i))));
        }
        ref.max_deviation = dev;
        if (dev <= 0.25 * cfg.epsilon) {
            ref.converged = true;
            break;
        }
        m *= 2;
    }
    enforce_truncation_guard(ref.obs->edge_tail, limit,
                             "reference N_p=" + std::to_string(ref.n_p) + " for point " + pt.name);
    return ref;
}

inline json reference_json(const Reference& r, const std::string& file) {
    return {{"n_p", r.n_p},
            {"file", file},
            {"converged", r.converged},
            {"max_deviation", std::isnan(r.max_deviation) ? json(nullptr) : json(r.max_deviation)}};
}

namespace detail {

inline std::string gp_quote(const std::string& s) { return "'" + s + "'"; }

inline std::string series_plot_script(const std::string& title, const std::string& ylabel,
                                      const std::vector<std::string>& files, bool log_y) {
    std::string s = "# gnuplot script\nset datafile separator ','\nset key autotitle columnhead\n";
    s += "set title " + gp_quote(title) + "\nset xlabel 't'\nset ylabel " + gp_quote(ylabel) + "\n";
    if (log_y) s += "set logscale y\n";
    s += "set terminal pngcairo size 900,600\nset output " + gp_quote(title + ".png") + "\nplot ";
    for (std::size_t k = 0; k < files.size(); ++k) {
        if (k) s += ", \\\n     ";
        s += gp_quote(files[k]) + " using 1:2 with lines title " + gp_quote(files[k]);
    }
    return s + "\n";
}

}  // namespace detail

/// One CSV (t, q, p) per seed over [-t_end, t_end], thinned to about n_samples rows per
/// direction, plus a JSON summary of the classical diagnostics of each seed.
inline CommandOutput cmd_portrait(const ExperimentConfig& cfg, io::OutputDir& out) {
    validate(cfg);
    const HamSystem sys = cfg.classical_system();
    std::vector<ClassicalState> seeds;
    for (const auto& pt : cfg.points) seeds.push_back({pt.q, pt.p});
    const double t_end = cfg.time_grid.t_end;
    const auto trajectories = phase_portrait(sys, seeds, t_end, cfg.classical_dt);

    const long steps = static_cast<long>(std::ceil(t_end / cfg.classical_dt - 1e-9));
    const long stride = std::max(1L, steps / (cfg.time_grid.n_samples - 1));

    CommandOutput res;
    json runs = json::array();
    std::vector<std::string> files;
    for (std::size_t k = 0; k < cfg.points.size(); ++k) {
        const auto& pt = cfg.points[k];
        const auto& tr = trajectories[k];
        std::vector<double> t, q, p;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            if ((static_cast<long>(i) - steps) % stride != 0) continue;
            t.push_back(tr.times[i]);
            q.push_back(tr.states[i].q);
            p.push_back(tr.states[i].p);
        }
        const std::string file = "portrait_" + pt.name + ".csv";
        out.csv(file, {"t", "q", "p"}, {t, q, p});
        files.push_back(file);

        const ClassicalState s0{pt.q, pt.p};
        const auto [l1, l2] = jacobian_eigen(sys, s0);
        const double lyap_t = cfg.system == SystemKind::IHO ? 20.0 : 200.0;
        json run = {{"point", pt.name},
                    {"q", pt.q},
                    {"p", pt.p},
                    {"file", file},
                    {"energy", tr.energy0},
                    {"jacobian_eigenvalues", {{l1.real(), l1.imag()}, {l2.real(), l2.imag()}}},
                    {"start", {tr.states.front().q, tr.states.front().p}},
                    {"end", {tr.states.back().q, tr.states.back().p}}};
        try {
            const auto est = lyapunov_tangent(sys, s0, lyap_t, cfg.classical_dt, 10);
            run["lyapunov"] = {{"exponent", est.exponent}, {"std_error", est.std_error}, {"t_total", lyap_t}};
        } catch (const Error& e) {
            run["lyapunov_error"] = e.what();
        }
        if (cfg.system == SystemKind::IHO) {
            run["region"] = to_string(classify_iho_point(s0));
            run["end_distance_to_saddle"] = std::hypot(tr.states.back().q, tr.states.back().p);
        } else {
            const auto v = hamilton_rhs(sys, s0);
            if (std::hypot(v.dq, v.dp) > 0.0) {
                const auto period = find_period(sys, s0, cfg.classical_dt, 50.0);
                run["period"] = optional_json(period);
                if (period) {
                    const auto loop = integrate(sys, s0, *period, cfg.classical_dt);
                    run["return_distance"] = distance(loop.back(), s0);
                }
            } else {
                run["period"] = nullptr;
                run["fixed_point"] = true;
            }
        }
        runs.push_back(run);
    }

    std::string gp = "# gnuplot script\nset datafile separator ','\nset xlabel 'q'\nset ylabel 'p'\n";
    gp += "set terminal pngcairo size 800,800\nset output 'portrait.png'\nplot ";
    for (std::size_t k = 0; k < files.size(); ++k) {
        if (k) gp += ", \\\n     ";
        gp += detail::gp_quote(files[k]) + " every ::1 using 2:3 with lines title " +
              detail::gp_quote(cfg.points[k].name);
    }
    out.write("portrait.gp", gp + "\n");

    res.summary = {{"command", "portrait"},
                   {"figure", cfg.figure},
                   {"system", to_string(cfg.system)},
                   {"t_end", t_end},
                   {"dt", cfg.classical_dt},
                   {"runs", runs}};
    out.json_file("portrait.json", res.summary);
    return res;
}

/// Mean photon number per (point, N_p), with the large-D reference and t_p.
inline CommandOutput cmd_photon(const ExperimentConfig& cfg, io::OutputDir& out, Workspace& ws) {
    validate(cfg);
    CommandOutput res;
    json runs = json::array();
    std::vector<std::string> files;
    for (const auto& pt : cfg.points) {
        for (int n_p : cfg.n_p) {
            const Observables& o = ws.observables(cfg, pt, n_p);
            const std::string id = run_id(pt, n_p);
            const std::string file = "photon_" + id + ".csv";
            out.csv(file, {"t", "mean_photon"}, {o.photon.times(), o.photon.values()});
            files.push_back(file);
            res.series["photon:" + id] = o.photon;

            const auto& v = o.photon.values();
            const auto it_min = std::min_element(v.begin(), v.end());
            json run = {{"point", pt.name},
                        {"q", pt.q},
                        {"p", pt.p},
                        {"n_p", n_p},
                        {"file", file},
                        {"initial", v.front()},
                        {"min", *it_min},
                        {"t_min", o.photon.time(static_cast<std::size_t>(it_min - v.begin()))},
                        {"max", *std::max_element(v.begin(), v.end())},
                        {"decreases_first", v.size() > 1 && v[1] < v[0]}};
            if (cfg.reference_factor > 0) {
                const auto ref = converged_reference(ws, cfg, pt, n_p, o.photon, Track::Photon);
                const std::string rfile = "photon_" + id + "_ref" + std::to_string(ref.n_p) + ".csv";
                out.csv(rfile, {"t", "mean_photon"}, {ref.obs->photon.times(), ref.obs->photon.values()});
                files.push_back(rfile);
                res.series["photon_ref:" + id] = ref.obs->photon;
                run["reference"] = reference_json(ref, rfile);
                run["t_p"] = optional_json(ref.t_p);
            }
            runs.push_back(run);
        }
    }
    out.write("photon.gp", detail::series_plot_script("photon", "<a^+a>", files, false));
    res.summary = {{"command", "photon"},
                   {"figure", cfg.figure},
                   {"system", to_string(cfg.system)},
                   {"epsilon", cfg.epsilon},
                   {"runs", runs}};
    out.json_file("photon.json", res.summary);
    return res;
}

inline ExpFit fit_run(const ExperimentConfig& cfg, int n_p, const TimeSeries& c) {
    const FitSpec f = resolve_fit(cfg, n_p);
    if (f.mode == FitSpec::Mode::Auto) {
        return fit_exponential(c, auto_window(c, f.min_span, {f.bound_lo, f.bound_hi}));
    }
    return fit_exponential(c, {f.lo, f.hi});
}

/// C(t) = Var[P](t) per (point, N_p) with a log-linear fit and the Ehrenfest time. Fit
/// failures are recorded per run.
inline CommandOutput cmd_otoc(const ExperimentConfig& cfg, io::OutputDir& out, Workspace& ws) {
    validate(cfg);
    CommandOutput res;
    json runs = json::array();
    std::vector<std::string> files;
    for (const auto& pt : cfg.points) {
        for (int n_p : cfg.n_p) {
            const Observables& o = ws.observables(cfg, pt, n_p);
            const std::string id = run_id(pt, n_p);
            const std::string file = "otoc_" + id + ".csv";
            json run = {{"point", pt.name}, {"q", pt.q}, {"p", pt.p}, {"n_p", n_p}, {"file", file}};

            const int dim = n_p + 1;
            if (cfg.oracle && dim <= kMaxOracleDim) {
                const auto& prop = ws.propagator(cfg, dim);
                const auto psi0 = coherent_state(FockDim::from_dim(dim), {pt.q, pt.p});
                const auto pq = quadratures(FockDim::from_dim(dim)).p;
                std::vector<double> col(o.otoc.size(), std::numeric_limits<double>::quiet_NaN());
                double worst = 0.0;
                json checks = json::array();
                const std::size_t last = o.otoc.size() - 1;
                for (int k = 0; k < kOracleChecks; ++k) {
                    const std::size_t i = last * static_cast<std::size_t>(k) / (kOracleChecks - 1);
                    col[i] = commutator_otoc(prop, psi0, pq, o.otoc.time(i));
                    worst = std::max(worst, std::abs(col[i] - o.otoc.value(i)));
                    checks.push_back(o.otoc.time(i));
                }
                out.csv(file, {"t", "C", "C_oracle"}, {o.otoc.times(), o.otoc.values(), col});
                run["oracle"] = {{"times", checks}, {"max_abs_diff", worst}};
            } else {
                out.csv(file, {"t", "C"}, {o.otoc.times(), o.otoc.values()});
                if (cfg.oracle) run["oracle_skipped"] = "D = " + std::to_string(dim) + " > 80";
            }
            files.push_back(file);
            res.series["otoc:" + id] = o.otoc;

            try {
                const ExpFit fit = fit_run(cfg, n_p, o.otoc);
                run["fit"] = {{"rate", fit.rate},
                              {"log_intercept", fit.log_intercept},
                              {"r_squared", fit.r_squared},
                              {"window", {fit.t_lo, fit.t_hi}},
                              {"samples", fit.samples}};
                run["ehrenfest_time"] = fit.rate > 0.0 ? json(ehrenfest_time(fit.rate, n_p)) : json(nullptr);
            } catch (const Error& e) {
                if (e.is_numerical_guard()) throw;
                run["fit"] = nullptr;
                run["fit_error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
            }

            if (cfg.reference_factor > 0) {
                const auto ref = converged_reference(ws, cfg, pt, n_p, o.otoc, Track::Otoc);
                const std::string rfile = "otoc_" + id + "_ref" + std::to_string(ref.n_p) + ".csv";
                out.csv(rfile, {"t", "C"}, {ref.obs->otoc.times(), ref.obs->otoc.values()});
                files.push_back(rfile);
                res.series["otoc_ref:" + id] = ref.obs->otoc;
                run["reference"] = reference_json(ref, rfile);
                run["correspondence_time"] = optional_json(ref.t_p);
            }
            runs.push_back(run);
        }
    }
    out.write("otoc.gp", detail::series_plot_script("otoc", "C(t)", files, true));
    res.summary = {{"command", "otoc"},
                   {"figure", cfg.figure},
                   {"system", to_string(cfg.system)},
                   {"epsilon", cfg.epsilon},
                   {"runs", runs}};
    out.json_file("otoc.json", res.summary);
    return res;
}

inline ClassicalState classical_at(const ExperimentConfig& cfg, const ClassicalState& s0, double t) {
    if (cfg.system == SystemKind::IHO) return flow_iho_analytic(s0, t);
    if (t == 0.0) return s0;
    return integrate(cfg.classical_system(), s0, t, std::min(cfg.classical_dt, t / 10.0)).back();
}

/// Husimi snapshots per (point, N_p) with norm, moments, local maxima and the classical
/// point at the same time.
inline CommandOutput cmd_husimi(const ExperimentConfig& cfg, io::OutputDir& out, Workspace& ws) {
    validate(cfg);
    require(cfg.husimi.has_value(), ErrorKind::Config,
            "husimi needs a 'husimi' section with snapshot times");
    const PhaseGrid grid = cfg.husimi->grid.value_or(default_husimi_grid(cfg.system));
    CommandOutput res;
    json runs = json::array();
    std::string gp = "# gnuplot script\nset terminal pngcairo size 700,700\nset xlabel 'q'\n"
                     "set ylabel 'p'\nset view map\nunset key\n";
    for (const auto& pt : cfg.points) {
        for (int n_p : cfg.n_p) {
            const auto dim = FockDim::from_photons(n_p);
            const auto& prop = ws.propagator(cfg, dim.dim());
            const auto psi0 = coherent_state(dim, {pt.q, pt.p});
            const std::string id = run_id(pt, n_p);
            json run = {{"point", pt.name}, {"q", pt.q}, {"p", pt.p}, {"n_p", n_p}};
            std::optional<double> t_p;
            bool have_ref = false;
            if (cfg.reference_factor > 0) {
                have_ref = true;
                const Observables& o = ws.observables(cfg, pt, n_p);
                const auto ref = converged_reference(ws, cfg, pt, n_p, o.photon, Track::Photon);
                t_p = ref.t_p;
                run["t_p"] = optional_json(t_p);
                run["reference"] = reference_json(ref, "");
                run["reference"].erase("file");
            }
            json snaps = json::array();
            for (std::size_t k = 0; k < cfg.husimi->snapshots.size(); ++k) {
                const double t = cfg.husimi->snapshots[k];
                const auto hg = husimi_q(evolve(prop, psi0, t), grid);
                const std::string file = "husimi_" + id + "_" + std::to_string(k) + ".grid";
                out.grid(file, hg);
                const auto cl = classical_at(cfg, {pt.q, pt.p}, t);
                json s = {{"t", t},
                          {"file", file},
                          {"norm", husimi_norm(hg)},
                          {"max", hg.max()},
                          {"local_maxima", count_local_maxima(hg)},
                          {"classical", {cl.q, cl.p}}};
                if (have_ref) s["before_t_p"] = !t_p || t < *t_p;
                try {
                    const auto m = husimi_moments(hg);
                    s["centroid"] = {m.mean_q, m.mean_p};
                    s["moments"] = {{"var_q", m.var_q}, {"var_p", m.var_p}, {"cov_qp", m.cov_qp}};
                    const double r = std::hypot(cl.q, cl.p);
                    s["centroid_rel_error"] =
                        r > 0.0 ? json(std::hypot(m.mean_q - cl.q, m.mean_p - cl.p) / r) : json(nullptr);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::GridTooSmall) throw;
                    s["centroid"] = nullptr;
                    s["centroid_error"] = e.what();
                }
                snaps.push_back(s);

                const double dq = grid.dq(), dp = grid.dp();
                gp += "set output " + detail::gp_quote(file + ".png") + "\nset title " +
                      detail::gp_quote(pt.name + " t=" + io::format_double(t)) + "\nplot " +
                      detail::gp_quote(file) + " matrix using (" + io::format_double(grid.q_min) +
                      "+$2*" + io::format_double(dq) + "):(" + io::format_double(grid.p_min) +
                      "+$1*" + io::format_double(dp) + "):3 with image\n";
            }
            run["snapshots"] = snaps;
            runs.push_back(run);
        }
    }
    out.write("husimi.gp", gp);
    res.summary = {{"command", "husimi"},
                   {"figure", cfg.figure},
                   {"system", to_string(cfg.system)},
                   {"grid", {{"q", {grid.q_min, grid.q_max, grid.n_q}}, {"p", {grid.p_min, grid.p_max, grid.n_p}}}},
                   {"runs", runs}};
    out.json_file("husimi.json", res.summary);
    return res;
}

inline CommandOutput run_command(const std::string& name, const ExperimentConfig& cfg,
                                 io::OutputDir& out, Workspace& ws) {
    if (name == "portrait") return cmd_portrait(cfg, out);
    if (name == "photon") return cmd_photon(cfg, out, ws);
    if (name == "otoc") return cmd_otoc(cfg, out, ws);
    if (name == "husimi") return cmd_husimi(cfg, out, ws);
    fail(ErrorKind::Config, "unknown command '" + name + "'");
    return {};
}

}  // namespace otoc::cli
