#include "slq/cli.hpp"

#include "slq/config.hpp"
#include "slq/csv.hpp"
#include "slq/riccati.hpp"
#include "slq/scenarios.hpp"
#include "slq/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <optional>

namespace slq {

namespace {

void log(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    std::fputs("[stackelberg_lq] ", stderr);
    std::vfprintf(stderr, fmt, args);
    std::fputc('\n', stderr);
    va_end(args);
}

struct Overrides {
    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths, steps;
    std::vector<double> checkpoints;
};

RunConfig resolve_config(const Overrides& o) {
    RunConfig cfg;
    if (o.config.empty()) {
        cfg.advertising = AdvertisingParams{};
    } else {
        cfg = load_config(o.config);
    }
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.seed) cfg.noise.seed = *o.seed;
    if (o.paths) {
        if (*o.paths < 1) throw InvalidParameter("--paths must be at least 1");
        cfg.noise.paths = *o.paths;
    }
    if (o.steps) {
        if (*o.steps < 2) throw InvalidParameter("--steps must be at least 2");
        cfg.N = *o.steps;
    }
    if (!o.checkpoints.empty()) cfg.checkpoints = o.checkpoints;
    return cfg;
}

void report_diagnostics(const ModelSpec& model, const TimeGrid& grid) {
    const Diagnostics d = validate(model, grid);
    for (const auto& w : d.warnings) log("warning: sign condition fails: %s", w.c_str());
}

int cmd_offline(const RunConfig& cfg) {
    const ModelSpec model = cfg.resolved_model();
    const TimeGrid grid = cfg.grid();
    report_diagnostics(model, grid);
    const OfflineSolution off = solve_offline(model, grid);
    log("wrote %s", write_riccati_csv(cfg.out_dir, off).c_str());
    log("wrote %s", write_gains_csv(cfg.out_dir, off).c_str());
    const UniquenessReport u = check_uniqueness_conditions(off.blocks, off.pi);
    log("uniqueness conditions strictly positive: Q-form %s, S-form %s, Pi1-form %s", u.q_positive ? "yes" : "no",
        u.s_positive ? "yes" : "no", u.pi1_positive ? "yes" : "no");
    return kExitOk;
}

int cmd_simulate(const RunConfig& cfg) {
    const ModelSpec model = cfg.resolved_model();
    const TimeGrid grid = cfg.grid();
    report_diagnostics(model, grid);
    const OfflineSolution off = solve_offline(model, grid);
    SimulationOptions opts;
    opts.checkpoints = cfg.checkpoint_nodes();
    opts.store_paths = cfg.store_paths;
    const auto t0 = std::chrono::steady_clock::now();
    const PathEnsemble ens = simulate_equilibrium(off, cfg.noise, opts);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log("simulated %zu paths x %zu steps in %.2f s", ens.paths, grid.steps(), secs);

    const CostEstimate costs = estimate_costs(ens);
    const FilterReport fr = filter_consistency_stats(ens, off.P, off.Pcal);
    log("wrote %s", write_ensemble_mean_csv(cfg.out_dir, ens).c_str());
    log("wrote %s", write_checkpoint_csv(cfg.out_dir, fr).c_str());
    log("wrote %s", write_costs_csv(cfg.out_dir, costs).c_str());
    if (!ens.stored.empty()) log("wrote %s", write_sample_paths_csv(cfg.out_dir, ens).c_str());

    const std::string path = (std::filesystem::path(cfg.out_dir) / "summary.csv").string();
    CsvWriter w(path, {"quantity", "value"});
    const CostStat v1 = node_stat(ens, 0, kV1), v2 = node_stat(ens, 0, kV2);
    for (const auto& [name, v] : std::vector<std::pair<std::string, double>>{
             {"mean_v1_0", v1.mean},
             {"se_v1_0", v1.std_error},
             {"mean_v2_0", v2.mean},
             {"se_v2_0", v2.std_error},
             {"mean_Wtilde_T", fr.mean_Wtilde_T},
             {"var_Wtilde_T", fr.var_Wtilde_T},
             {"max_decomposition_error", ens.max_decomposition_error},
             {"max_abs_x", ens.max_abs_x}})
        w.row(std::vector<std::string>{name, format_double(v)});
    log("wrote %s", path.c_str());
    log("J1 = %.6g +- %.2g, J2 = %.6g +- %.2g", costs.J1.mean, costs.J1.std_error, costs.J2.mean,
        costs.J2.std_error);
    return kExitOk;
}

int cmd_verify(const RunConfig& cfg) {
    const VerifyReport rep = run_verification(cfg);
    const std::string path = (std::filesystem::path(cfg.out_dir) / "verify.csv").string();
    CsvWriter w(path, {"check", "value", "threshold", "pass", "advisory", "detail"});
    for (const CheckResult& c : rep.checks) {
        w.row(std::vector<std::string>{c.name, format_double(c.value), format_double(c.threshold),
                                       c.pass ? "true" : "false", c.advisory ? "true" : "false",
                                       "\"" + c.detail + "\""});
        log("%-4s %-44s value=%-12.4g %s", c.advisory ? "info" : (c.pass ? "PASS" : "FAIL"), c.name.c_str(), c.value,
            c.detail.c_str());
    }
    log("wrote %s", path.c_str());
    if (!rep.passed()) {
        log("verification failed");
        return kExitVerifyFailed;
    }
    log("all checks passed");
    return kExitOk;
}

int cmd_special_case(const RunConfig& cfg) {
    const ModelSpec model = cfg.resolved_model();
    const TimeGrid grid = cfg.grid();
    const SpecialCaseSolution sc = special_case_solution(model, grid);
    const OfflineSolution off = solve_offline(model, grid);
    const SpecialCaseComparison cmp = compare_with_general(sc, off);
    log("wrote %s", write_special_case_csv(cfg.out_dir, sc, off).c_str());
    log("max gain difference %.3e, max |Pi| %.3e", cmp.max_gain_diff, cmp.max_abs_Pi);
    if (cmp.max_gain_diff > 1e-6 || cmp.max_abs_Pi != 0.0) {
        log("special-case solver disagrees with the general pipeline");
        return kExitVerifyFailed;
    }
    return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
    if (!cfg.advertising) throw InvalidParameter("sweep needs an [advertising] model");
    auto sweeps = cfg.sweeps;
    if (sweeps.empty()) sweeps = {{"beta2", beta2_sweep_values()}, {"mu1", mu1_sweep_values()}};
    const std::string path = (std::filesystem::path(cfg.out_dir) / "sweep_summary.csv").string();
    CsvWriter w(path, {"param", "param_value", "mean_v1_0", "se_v1_0", "mean_v2_0", "se_v2_0"});
    for (const auto& [name, values] : sweeps) {
        const SweepResult res = parameter_sweep(*cfg.advertising, name, values, cfg.grid(), cfg.noise);
        for (const auto& f : write_sweep_csv(cfg.out_dir, res)) log("wrote %s", f.c_str());
        for (const SweepPoint& p : res.points)
            w.row(std::vector<std::string>{name, format_double(p.value), format_double(p.v1_0.mean),
                                           format_double(p.v1_0.std_error), format_double(p.v2_0.mean),
                                           format_double(p.v2_0.std_error)});
    }
    log("wrote %s", path.c_str());
    return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Leader-follower LQ game with partial observation: solver and Monte Carlo harness"};
    app.require_subcommand(1);
    Overrides o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Configuration file");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--seed", o.seed, "Master seed");
        sub->add_option("--paths", o.paths, "Monte Carlo path count");
        sub->add_option("--steps", o.steps, "Time steps N");
        sub->add_option("--checkpoints", o.checkpoints, "Checkpoint times")->delimiter(',');
    };
    for (const char* name : {"offline", "simulate", "verify", "special-case", "sweep"}) add_common(app.add_subcommand(name));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    const std::string chosen = app.get_subcommands().front()->get_name();
    try {
        const RunConfig cfg = resolve_config(o);
        if (chosen == "offline") return cmd_offline(cfg);
        if (chosen == "simulate") return cmd_simulate(cfg);
        if (chosen == "verify") return cmd_verify(cfg);
        if (chosen == "special-case") return cmd_special_case(cfg);
        return cmd_sweep(cfg);
    } catch (const ConfigError& e) {
        log("config error: %s", e.what());
        return kExitConfig;
    } catch (const InvalidParameter& e) {
        log("invalid parameter: %s", e.what());
        return kExitConfig;
    } catch (const SpecialCaseInapplicable& e) {
        log("special case does not apply: %s", e.what());
        return kExitConfig;
    } catch (const HardViolation& e) {
        log("hard violation: %s", e.what());
        return kExitHardViolation;
    } catch (const Error& e) {
        log("numerical failure: %s", e.what());
        return kExitBlowUp;
    } catch (const std::exception& e) {
        log("error: %s", e.what());
        return kExitConfig;
    }
}

}  // namespace slq
