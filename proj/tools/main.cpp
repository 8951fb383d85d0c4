// Command-line front end: run single scenarios, sweeps, calibrations, and
// feasibility checks against config files or named presets.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stirapsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace stirapsim;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset_name;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    int jobs = 1;
    double tol = 0.0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "path to a key = value config file");
    cmd->add_option("--preset", args.preset_name, "named preset (see preset-list)");
    cmd->add_option("--out", args.out_dir, "output directory for artifacts");
    cmd->add_option("--param", args.overrides, "override, KEY=VALUE (repeatable)");
    cmd->add_option("--jobs", args.jobs, "worker threads for sweeps");
    cmd->add_option("--tol", args.tol, "override integrator relative tolerance");
}

ScenarioConfig assemble_config(const CommonArgs& args) {
    ScenarioConfig cfg;
    if (!args.config_path.empty() && !args.preset_name.empty()) {
        // File entries override the preset base.
        std::ifstream in(args.config_path);
        if (!in) throw ValidationError("cannot open config file " + args.config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = ScenarioConfig::from_text("preset = " + args.preset_name + "\n" + ss.str());
    } else if (!args.config_path.empty()) {
        cfg = ScenarioConfig::from_file(args.config_path);
    } else if (!args.preset_name.empty()) {
        cfg = ScenarioConfig::preset(args.preset_name);
    } else {
        throw ValidationError("either --config or --preset is required");
    }
    for (const auto& ov : args.overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ValidationError("--param expects KEY=VALUE, got '" + ov + "'");
        cfg.set(ov.substr(0, eq), ov.substr(eq + 1), Provenance::override_);
    }
    if (args.tol > 0.0) cfg.set("rel_tol", std::to_string(args.tol), Provenance::override_);
    cfg.validate();
    return cfg;
}

void ensure_out_dir(const std::string& dir) { fs::create_directories(dir); }

int dispatch(int argc, char** argv) {
    CLI::App app{"intracavity-STIRAP photon interface simulator"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, cal_args, check_args;

    auto* cmd_run = app.add_subcommand("run", "simulate one scenario, write CSV and summary");
    add_common(cmd_run, run_args);

    auto* cmd_sweep = app.add_subcommand("sweep", "one run per grid point of a parameter");
    add_common(cmd_sweep, sweep_args);
    std::string sweep_param;
    std::vector<double> sweep_grid;
    cmd_sweep->add_option("parameter", sweep_param, "config key, eta_scale, or kappa_prime")
        ->required();
    cmd_sweep->add_option("grid", sweep_grid,
                          "grid values in the key's canonical unit (built-in grid when omitted)");

    auto* cmd_cal = app.add_subcommand("calibrate", "tune unpublished geometry within bounds");
    add_common(cmd_cal, cal_args);
    std::vector<std::string> free_params;
    std::string target = "auto";
    cmd_cal->add_option("--free", free_params, "parameters to tune: d, omega0, sync_offset")
        ->required()
        ->delimiter(',');
    cmd_cal->add_option("--target", target, "objective: p_min, p1, p2, fidelity, auto");

    auto* cmd_check = app.add_subcommand("check", "evaluate feasibility conditions only");
    add_common(cmd_check, check_args);

    auto* cmd_list = app.add_subcommand("preset-list", "list named presets");

    CLI11_PARSE(app, argc, argv);

    if (cmd_list->parsed()) {
        for (const auto& [name, blurb] : ScenarioConfig::preset_catalog())
            std::printf("%-24s %s\n", name.c_str(), blurb.c_str());
        return 0;
    }
    if (cmd_run->parsed()) {
        ScenarioConfig cfg = assemble_config(run_args);
        ensure_out_dir(run_args.out_dir);
        RunResult result = run(cfg);
        const fs::path out(run_args.out_dir);
        write_timeseries_csv(out / "timeseries.csv", result);
        write_summary(out / "summary.txt", result.summary);
        std::ofstream resolved(out / "config.resolved.txt");
        resolved << cfg.serialize();
        std::cout << summary_to_text(result.summary);
        return 0;
    }
    if (cmd_sweep->parsed()) {
        ScenarioConfig cfg = assemble_config(sweep_args);
        ensure_out_dir(sweep_args.out_dir);
        if (sweep_grid.empty() && (sweep_param == "eta_scale" || sweep_param == "kappa_prime"))
            sweep_grid = builtin_grid(cfg, sweep_param);
        SweepTable table = sweep(cfg, sweep_param, sweep_grid, sweep_args.jobs);
        const fs::path out_path = fs::path(sweep_args.out_dir) / "sweep.csv";
        write_sweep_csv(out_path, table);
        std::printf("wrote %s (%zu rows)\n", out_path.string().c_str(), table.rows.size());
        return 0;
    }
    if (cmd_cal->parsed()) {
        ScenarioConfig cfg = assemble_config(cal_args);
        ensure_out_dir(cal_args.out_dir);
        CalibrationResult result = calibrate(cfg, free_params, target);
        const fs::path out(cal_args.out_dir);
        std::ofstream calibrated(out / "config.calibrated.txt");
        calibrated << result.config.serialize();
        RunResult final_run = run(result.config);
        write_summary(out / "summary.txt", final_run.summary);
        std::printf("objective = %.6f after %d evaluations\n", result.objective,
                    result.evaluations);
        std::cout << summary_to_text(final_run.summary);
        return 0;
    }
    if (cmd_check->parsed()) {
        ScenarioConfig cfg = assemble_config(check_args);
        const FeasibilityInput in = cfg.feasibility_input();
        for (const auto& rep : all_condition_reports(in))
            std::printf("%-20s lhs=%.6g rhs=%.6g margin=%.6g %s\n", rep.name.c_str(), rep.lhs,
                        rep.rhs, rep.margin, rep.pass ? "PASS" : "fail");
        const RepetitionRate rr = repetition_rate(in);
        std::printf("%-20s T=%.6g us  W=%.6g kHz\n", "repetition_rate", rr.interval_us,
                    rr.rate_khz);
        if (in.omega_p.size() >= 2) {
            const RecoilRatio rec = recoil_distinguishability(in, cfg.length_um("D_x"));
            std::printf("%-20s ratio=%.6g%s\n", "recoil", rec.ratio,
                        rec.infinite ? " (infinite)" : "");
        }
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 1;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const PropagationError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
