#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kdvstab/runner.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string cache_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> overrides;
    bool no_guards = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON run configuration");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--cache", args.cache_dir, "Gramian cache directory");
    cmd->add_option("--seed", args.seed, "RNG seed")->each([&args](const std::string&) {
        args.seed_set = true;
    });
    cmd->add_option("--override", args.overrides, "KEY=VALUE config override (repeatable)");
    cmd->add_flag("--no-guards", args.no_guards, "disable smallness guards");
}

kdvstab::RunConfig resolve_config(const CommonArgs& args) {
    kdvstab::RunConfig cfg;
    if (!args.config_path.empty()) cfg = kdvstab::parse_config_file(args.config_path);
    for (const auto& ov : args.overrides) kdvstab::apply_override(cfg, ov);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (!args.cache_dir.empty()) cfg.cache_dir = args.cache_dir;
    if (args.seed_set) cfg.seed = args.seed;
    if (!cfg.cache_dir) {
        if (const char* env = std::getenv("KDVSTAB_CACHE")) cfg.cache_dir = env;
    }
    if (args.no_guards) {
        cfg.guards = false;
        std::cerr << "warning: smallness guards disabled; the closed-loop analysis assumes "
                     "(lambda + e^{(4/3) lambda T})(||Q^-1 y0|| + ||y0||) small, and blow-up "
                     "of the uncontrolled dynamics is possible\n";
    }
    return cfg;
}

int report_error(const std::string& kind, const std::string& what, const std::string& out_dir) {
    nlohmann::json j;
    j["error"] = {{"kind", kind}, {"message", what}};
    std::cerr << j.dump(2) << std::endl;
    if (!out_dir.empty()) {
        try {
            kdvstab::atomic_write(std::filesystem::path(out_dir) / "error.json", j.dump(2) + "\n");
        } catch (...) {
        }
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gramian-based boundary feedback synthesis and closed-loop simulation "
                 "for the KdV equation on (0, L)"};
    app.require_subcommand(1);

    CommonArgs sim_args, gram_args, ft_args, scan_args, diag_args;

    auto* sim = app.add_subcommand("simulate", "closed-loop or open-loop run (mode from config)");
    add_common(sim, sim_args);

    auto* gram = app.add_subcommand("gramian", "assemble and cache Gramians");
    add_common(gram, gram_args);
    std::string gram_method = "sylvester";
    std::vector<double> gram_lambdas;
    gram->add_option("--method", gram_method, "sylvester|quadrature|both")
        ->check(CLI::IsMember({"sylvester", "quadrature", "both"}));
    gram->add_option("--lambdas", gram_lambdas, "lambda values (default: config lambda)");

    auto* ft = app.add_subcommand("finite-time", "staged finite-time stabilization run");
    add_common(ft, ft_args);

    auto* scan = app.add_subcommand("critical-scan", "Gramian conditioning scan over L");
    add_common(scan, scan_args);
    double L_lo = 5.5, L_hi = 7.0;
    int points = 31;
    scan->add_option("--from", L_lo, "scan start length");
    scan->add_option("--to", L_hi, "scan end length");
    scan->add_option("--points", points, "number of scan points");

    auto* diag = app.add_subcommand("diagnose",
                                    "antisymmetry defect, admissibility constant, Lyapunov residuals");
    add_common(diag, diag_args);

    CLI11_PARSE(app, argc, argv);

    std::string out_for_error;
    try {
        kdvstab::RunResult result;
        if (sim->parsed()) {
            auto cfg = resolve_config(sim_args);
            out_for_error = cfg.out_dir.string();
            result = kdvstab::run_simulation(cfg);
        } else if (gram->parsed()) {
            auto cfg = resolve_config(gram_args);
            out_for_error = cfg.out_dir.string();
            result = kdvstab::run_gramian(cfg, gram_method, gram_lambdas);
        } else if (ft->parsed()) {
            auto cfg = resolve_config(ft_args);
            cfg.mode = kdvstab::RunMode::FiniteTime;
            out_for_error = cfg.out_dir.string();
            result = kdvstab::run_simulation(cfg);
        } else if (scan->parsed()) {
            auto cfg = resolve_config(scan_args);
            out_for_error = cfg.out_dir.string();
            result = kdvstab::run_critical_scan(cfg, L_lo, L_hi, points);
        } else if (diag->parsed()) {
            auto cfg = resolve_config(diag_args);
            out_for_error = cfg.out_dir.string();
            result = kdvstab::run_diagnose(cfg);
        }
        std::cout << result.summary_json;
        return result.exit_code;
    } catch (const kdvstab::ConfigError& e) {
        return report_error(e.kind(), e.what(), out_for_error);
    } catch (const kdvstab::NumericalError& e) {
        return report_error(e.kind(), e.what(), out_for_error);
    } catch (const std::exception& e) {
        return report_error("internal", e.what(), out_for_error);
    }
}
