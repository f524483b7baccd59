#pragma once

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "carleman/config.hpp"
#include "carleman/csv.hpp"
#include "carleman/diagnostics.hpp"
#include "carleman/experiment.hpp"

namespace carleman {

namespace detail {

inline std::string default_output_dir(const std::string& cli_out, const std::string& cfg_out) {
    if (!cli_out.empty()) return cli_out;
    if (!cfg_out.empty()) return cfg_out;
    if (const char* env = std::getenv("CARLEMAN_OUT_DIR")) return env;
    return "results";
}

inline ExperimentConfig build_run_config(const std::string& preset, const std::string& config_path,
                                         bool seed_given, std::uint64_t seed) {
    ExperimentConfig cfg;
    if (!preset.empty()) cfg = preset_config(preset_from_name(preset));
    if (!config_path.empty()) apply_config(cfg, parse_config_file(config_path));
    if (preset.empty() && config_path.empty())
        throw std::invalid_argument("need --preset or --config");
    if (seed_given) cfg.seed = seed;
    return cfg;
}

inline void print_report_summary(const ExperimentReport& rep, std::ostream& os) {
    os << "grid " << rep.config.N << "x" << rep.config.M << ", slice at x="
       << rep.slice_x_actual << " (node " << rep.slice_index << ")\n";
    for (const RunResult& r : rep.runs) {
        os << "  " << r.label << ": E(slice)=" << r.e_at_slice
           << "  J " << r.trajectory.J_history.front() << " -> "
           << r.trajectory.J_history.back() << "\n";
    }
    os << "wall time " << rep.wall_seconds << " s (not part of the persisted report)\n";
}

}  // namespace detail

/// Entry point behind the `carleman` binary. Exit codes: 0 success,
/// 1 configuration/usage error, 2 numerical failure.
inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Lateral-Cauchy reconstruction via Carleman-weighted Tikhonov minimization"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run a benchmark preset end to end");
    std::string run_preset_name, run_out, run_config;
    std::uint64_t run_seed = kPresetSeed;
    run->add_option("--preset", run_preset_name,
                    "fig1-s1 | fig1-s2 | fig2-slices | fig3-starts | fig4-linear | custom");
    run->add_option("--seed", run_seed, "noise seed");
    run->add_option("--out", run_out, "output directory (default: $CARLEMAN_OUT_DIR or ./results)");
    run->add_option("--config", run_config, "key = value config file overriding preset fields");

    // forward
    auto* fwd = app.add_subcommand("forward", "solve the forward problem and dump the trace");
    std::string fwd_preset = "fig1-s1", fwd_out;
    int fwd_N = 128, fwd_M = 32;
    double fwd_noise = 0.0;
    std::uint64_t fwd_seed = kPresetSeed;
    fwd->add_option("--preset", fwd_preset, "problem preset selecting the nonlinearity");
    fwd->add_option("-N", fwd_N, "space intervals");
    fwd->add_option("-M", fwd_M, "time intervals");
    fwd->add_option("--noise", fwd_noise, "relative noise level on the trace");
    fwd->add_option("--seed", fwd_seed, "noise seed");
    fwd->add_option("--out", fwd_out, "output directory");

    // check
    auto* chk = app.add_subcommand("check", "run gradient/projection/convexity diagnostics");

    // sweep
    auto* swp = app.add_subcommand("sweep", "run the pipeline over a custom lambda list");
    std::string swp_lambdas, swp_preset = "fig1-s1", swp_out, swp_config;
    std::uint64_t swp_seed = kPresetSeed;
    bool swp_seed_given = false;
    swp->add_option("--lambda", swp_lambdas, "comma-separated lambda values")->required();
    swp->add_option("--preset", swp_preset, "base preset");
    swp->add_option("--seed", swp_seed, "noise seed")->each([&](const std::string&) {
        swp_seed_given = true;
    });
    swp->add_option("--out", swp_out, "output directory");
    swp->add_option("--config", swp_config, "config file overriding preset fields");

    bool run_seed_given = false;
    run->get_option("--seed")->each([&](const std::string&) { run_seed_given = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) {
            ExperimentConfig cfg =
                detail::build_run_config(run_preset_name, run_config, run_seed_given, run_seed);
            cfg.output_dir = detail::default_output_dir(run_out, cfg.output_dir);
            const ExperimentReport rep = run_preset(cfg);
            detail::print_report_summary(rep, std::cout);
            std::cout << "report written to " << cfg.output_dir << "\n";
            return 0;
        }
        if (fwd->parsed()) {
            const Preset p = preset_from_name(fwd_preset);
            const ExperimentConfig base = preset_config(p);
            const Grid grid = build_grid(fwd_N, fwd_M);
            const ProblemSpec problem = benchmark_problem(base.nonlinearity);
            const Field2D u = solve_forward(problem, grid);
            CauchyTrace trace = extract_trace(u);
            if (fwd_noise > 0.0) trace = add_noise(trace, fwd_noise, fwd_seed);
            trace = differentiate_trace(trace, grid);
            const std::string dir = detail::default_output_dir(fwd_out, "");
            std::filesystem::create_directories(dir);
            const std::string path = (std::filesystem::path(dir) / "trace.csv").string();
            write_trace_csv(path, trace, grid);
            std::cout << "trace written to " << path << "\n";
            return 0;
        }
        if (chk->parsed()) {
            const DiagnosticsReport rep = run_diagnostics();
            std::cout << rep.to_string();
            return rep.all_pass() ? 0 : 2;
        }
        if (swp->parsed()) {
            ExperimentConfig cfg =
                detail::build_run_config(swp_preset, swp_config, swp_seed_given, swp_seed);
            cfg.lambda_list.clear();
            for (const std::string& item : detail::split_list(swp_lambdas))
                cfg.lambda_list.push_back(std::stod(item));
            if (cfg.lambda_list.empty()) throw std::invalid_argument("--lambda list is empty");
            cfg.preset = Preset::Custom;
            cfg.output_dir = detail::default_output_dir(swp_out, cfg.output_dir);
            const ExperimentReport rep = run_preset(cfg);
            detail::print_report_summary(rep, std::cout);
            std::cout << "report written to " << cfg.output_dir << "\n";
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace carleman
