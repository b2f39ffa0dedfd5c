// otoc-lab: command-line front end for the OTOC / Husimi experiments.
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "otoc/commands.hpp"
#include "otoc/config.hpp"
#include "otoc/reproduce.hpp"

#ifndef OTOC_DEFAULT_CONFIG_DIR
#define OTOC_DEFAULT_CONFIG_DIR "configs"
#endif

namespace {

enum Exit { kOk = 0, kConfigError = 1, kGuardTripped = 2, kAcceptanceFailed = 3 };

struct Options {
    std::string config;
    std::string out;
    std::optional<int> np;
    std::string point;
    bool oracle = false;
    std::string only;
};

otoc::NamedPoint parse_point(const std::string& s) {
    std::istringstream in(s);
    double q = 0.0, p = 0.0;
    char comma = 0;
    in >> q >> comma >> p;
    if (!in || comma != ',' || !(in >> std::ws).eof()) {
        otoc::fail(otoc::ErrorKind::Config, "--point expects q,p (for example 3,3), got '" + s + "'");
    }
    return {"P", q, p};
}

otoc::ExperimentConfig load_with_overrides(const Options& o) {
    if (o.config.empty()) otoc::fail(otoc::ErrorKind::Config, "--config <path> is required");
    auto cfg = otoc::load_config(o.config);
    if (o.np) cfg.n_p = {*o.np};
    if (!o.point.empty()) cfg.points = {parse_point(o.point)};
    if (o.oracle) cfg.oracle = true;
    return cfg;
}

int run_single(const std::string& command, const Options& o) {
    const auto cfg = load_with_overrides(o);
    otoc::validate(cfg);
    const auto dir = otoc::resolve_output_dir(cfg, o.out);
    otoc::io::OutputDir out(dir, otoc::config_hash(cfg));
    out.write("config.json", otoc::serialize_config(cfg));
    otoc::cli::Workspace ws;
    otoc::cli::run_command(command, cfg, out, ws);
    std::cout << command << ": wrote " << out.written().size() << " files to " << dir.string() << "\n";
    return kOk;
}

int run_reproduce(const Options& o) {
    const std::string dir = o.config.empty() ? OTOC_DEFAULT_CONFIG_DIR : o.config;
    std::string out = o.out;
    if (out.empty()) {
        const char* env = std::getenv(otoc::kOutputDirEnv);
        out = (env && *env) ? env : "otoc-out";
    }
    const auto res = otoc::cli::reproduce_all(dir, out, o.only);
    for (const auto& [fig, entry] : res.report.at("figures").items()) {
        if (entry.at("status") != "ok") {
            std::cout << fig << ": ERROR " << entry.at("error").at("message").get<std::string>() << "\n";
            continue;
        }
        for (const auto& c : entry.at("checks")) {
            std::cout << fig << ": " << (c.at("pass").get<bool>() ? "PASS" : "FAIL") << "  "
                      << c.at("name").get<std::string>() << "  value=" << c.at("value").dump() << "\n";
        }
    }
    std::cout << "report: " << (std::filesystem::path(out) / "report.json").string() << "\n";
    return res.primary_pass ? kOk : kAcceptanceFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"otoc-lab: OTOC growth, photon number and Husimi dynamics of inverted oscillators"};
    app.require_subcommand(1);
    app.set_version_flag("--version", OTOC_VERSION);

    Options o;
    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "Experiment config (JSON)");
        sub->add_option("--out", o.out, "Output directory (default: config output_dir, then $OTOC_LAB_OUT)");
        sub->add_option("--np", o.np, "Override N_p with a single value");
        sub->add_option("--point", o.point, "Override initial points with one point q,p");
    };
    std::string chosen;
    for (const char* name : {"portrait", "photon", "otoc", "husimi"}) {
        auto* sub = app.add_subcommand(name);
        add_common(sub);
        if (std::string(name) == "otoc") {
            sub->add_flag("--oracle", o.oracle, "Add commutator-route values at sparse times (D <= 80)");
        }
        sub->callback([&chosen, name] { chosen = name; });
    }
    auto* rep = app.add_subcommand("reproduce-all", "Run every bundled figure config and write report.json");
    rep->add_option("--config", o.config, "Directory holding fig*.json (default: bundled configs)");
    rep->add_option("--out", o.out, "Output root");
    rep->add_option("--only", o.only, "Run a single figure, e.g. fig4");
    rep->callback([&chosen] { chosen = "reproduce-all"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (chosen == "reproduce-all") return run_reproduce(o);
        return run_single(chosen, o);
    } catch (const otoc::Error& e) {
        std::cerr << "otoc-lab: " << otoc::to_string(e.kind()) << ": " << e.what() << "\n";
        return e.is_numerical_guard() ? kGuardTripped : kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "otoc-lab: " << e.what() << "\n";
        return kConfigError;
    }
}
