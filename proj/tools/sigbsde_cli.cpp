// Command-line front end: grid-dump, driver-table, solve, sweep, verify, report.
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sigbsde/experiment.hpp"
#include "sigbsde/verify.hpp"

using namespace sigbsde;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> scenario;
    std::vector<double> c;
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "JSON experiment config (defaults built in when omitted)");
        app->add_option("--scenario", scenario, "no_signal, hide_small or hide_large");
        app->add_option("--c", c, "signal threshold(s)");
        app->add_option("--paths", paths, "number of Monte Carlo paths");
        app->add_option("--seed", seed, "single seed replacing the configured list");
    }

    [[nodiscard]] ExperimentConfig resolve() const {
        ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
        if (scenario) cfg.variants = {parse_signal_kind(*scenario)};
        if (!c.empty()) cfg.c_values = c;
        if (paths) cfg.n_paths = *paths;
        if (seed) cfg.seeds = {*seed};
        cfg.validate();
        return cfg;
    }
};

/// First configured scenario, for the single-scenario subcommands.
SignalScenario first_scenario(const ExperimentConfig& cfg) {
    const SignalKind kind = cfg.variants.front();
    if (kind == SignalKind::none || cfg.c_values.empty()) return SignalScenario::no_signal();
    return {kind, cfg.c_values.front()};
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot write " + path);
    return file;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Signal-constrained utility maximisation via BSDEs with jumps"};
    app.require_subcommand(1);

    Overrides grid_o, table_o, solve_o, sweep_o, verify_o;

    auto* grid_cmd = app.add_subcommand("grid-dump", "write the jump grid with signal values");
    grid_o.attach(grid_cmd);
    std::string grid_out;
    grid_cmd->add_option("--out", grid_out, "output CSV (stdout by default)");

    auto* table_cmd = app.add_subcommand("driver-table", "tabulate f(z, u) and p*(0, z, u) on a z range");
    table_o.attach(table_cmd);
    double z_min = -2.0, z_max = 2.0, u_const = 0.0;
    std::size_t z_steps = 41;
    std::optional<int> table_m;
    std::string table_out;
    table_cmd->add_option("--z-min", z_min);
    table_cmd->add_option("--z-max", z_max);
    table_cmd->add_option("--z-steps", z_steps)->check(CLI::PositiveNumber);
    table_cmd->add_option("--u", u_const, "constant value of u on every bin");
    table_cmd->add_option("--m", table_m, "also tabulate the penalized driver f_m");
    table_cmd->add_option("--out", table_out);

    auto* solve_cmd = app.add_subcommand("solve", "solve one scenario for each configured seed");
    solve_o.attach(solve_cmd);
    std::string solution_out;
    solve_cmd->add_option("--solution-csv", solution_out, "per-step per-cell export for the first seed");

    auto* sweep_cmd = app.add_subcommand("sweep", "c-sweep over the configured variants and seeds");
    sweep_o.attach(sweep_cmd);
    std::string results_out = "results.csv", summary_out;
    sweep_cmd->add_option("--out", results_out, "results CSV");
    sweep_cmd->add_option("--summary", summary_out, "per-c summary CSV");

    auto* verify_cmd = app.add_subcommand("verify", "run the property checks; exit 0 iff all pass");
    verify_o.attach(verify_cmd);
    std::string verify_csv;
    std::size_t samples = 1000;
    verify_cmd->add_option("--csv", verify_csv, "also write the reports as CSV");
    verify_cmd->add_option("--samples", samples, "random samples per driver check");

    auto* report_cmd = app.add_subcommand("report", "plot-ready files from a results CSV");
    std::string report_in, report_dir = "report";
    report_cmd->add_option("--results", report_in, "results CSV")->required();
    report_cmd->add_option("--out", report_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*grid_cmd) {
            const ExperimentConfig cfg = grid_o.resolve();
            const PipelineConfig p = cfg.pipeline(first_scenario(cfg));
            std::ofstream file;
            write_grid_csv(open_or_stdout(grid_out, file), make_grid(p), p.scenario);
        } else if (*table_cmd) {
            const ExperimentConfig cfg = table_o.resolve();
            const PipelineConfig p = cfg.pipeline(first_scenario(cfg));
            const JumpGrid grid = make_grid(p);
            const DriverContext ctx = make_context(p, grid);
            const GridFunction u = GridFunction::Constant(static_cast<Eigen::Index>(grid.size()), u_const);
            std::ofstream file;
            std::ostream& out = open_or_stdout(table_out, file);
            out.precision(17);
            out << "z,f,p_default" << (table_m ? ",f_m" : "") << '\n';
            for (std::size_t i = 0; i < z_steps; ++i) {
                const double z = z_steps == 1 ? z_min
                                              : z_min + (z_max - z_min) * static_cast<double>(i) /
                                                            static_cast<double>(z_steps - 1);
                const DriverValue v = driver_f(z, u, ctx);
                out << z << ',' << v.value << ',' << v.p_default;
                if (table_m) out << ',' << penalized_driver_fm(z, u, PenalizationIndex(*table_m), ctx);
                out << '\n';
            }
        } else if (*solve_cmd) {
            const ExperimentConfig cfg = solve_o.resolve();
            const SignalScenario scenario = first_scenario(cfg);
            const PipelineConfig p = cfg.pipeline(scenario);
            const JumpGrid grid = make_grid(p);
            std::vector<double> y0;
            std::cout.precision(12);
            std::cout << "scenario,c,seed,y0,value,wall_time\n";
            for (const auto seed : cfg.seeds) {
                const auto start = std::chrono::steady_clock::now();
                const PipelineRun run = run_on_batch(p, grid, make_batch(p, grid, seed));
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                std::cout << scenario.name() << ',' << scenario.c << ',' << seed << ',' << run.solution.y0 << ','
                          << run.value << ',' << secs << '\n';
                if (!solution_out.empty() && y0.empty()) {
                    std::ofstream file(solution_out);
                    write_solution_csv(file, run.solution, grid);
                }
                y0.push_back(run.solution.y0);
            }
            const MultiRunResult m = summarize_runs(y0);
            std::cout << "# mean_y0=" << m.mean << " spread=" << m.spread
                      << " value=" << -std::exp(-cfg.utility.lambda * (cfg.utility.x0 - m.mean))
                      << " config_hash=" << config_hash(cfg) << '\n';
        } else if (*sweep_cmd) {
            const ExperimentConfig cfg = sweep_o.resolve();
            const auto rows = run_sweep(cfg, &std::cerr);
            std::ofstream out(results_out);
            if (!out) throw std::runtime_error("cannot write " + results_out);
            write_results_csv(out, rows);
            if (!summary_out.empty()) {
                std::ofstream s(summary_out);
                write_summary_csv(s, summarize(rows));
            }
            for (const auto& r : rows) {
                if (!r.ok) return 3;
            }
        } else if (*verify_cmd) {
            const ExperimentConfig cfg = verify_o.resolve();
            VerifyOptions opts;
            opts.n_samples = samples;
            opts.seeds = cfg.seeds;
            if (opts.seeds.size() < 2) opts.seeds.push_back(opts.seeds.front() + 1);
            const auto reports = run_verify_suite(cfg.pipeline(first_scenario(cfg)), opts);
            write_reports_text(std::cout, reports);
            if (!verify_csv.empty()) {
                std::ofstream out(verify_csv);
                write_reports_csv(out, reports);
            }
            for (const auto& r : reports) {
                if (!r.pass) return 1;
            }
        } else if (*report_cmd) {
            std::ifstream in(report_in);
            if (!in) throw std::runtime_error("cannot open results " + report_in);
            for (const auto& path : write_report(read_results_csv(in), report_dir)) std::cout << path.string() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
