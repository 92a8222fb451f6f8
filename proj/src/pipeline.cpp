#include "sigbsde/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "sigbsde/errors.hpp"
#include "sigbsde/numerics.hpp"

namespace sigbsde {

JumpGrid make_grid(const PipelineConfig& cfg) { return build_grid(cfg.q, cfg.layout, cfg.market); }

DriverContext make_context(const PipelineConfig& cfg, const JumpGrid& grid) {
    return {cfg.market, grid, cfg.scenario, cfg.utility, cfg.driver};
}

PathBatch make_batch(const PipelineConfig& cfg, const JumpGrid& grid, std::uint64_t seed) {
    return simulate_batch(cfg.market, grid, TimeGrid::uniform(cfg.n_steps, cfg.market.T), cfg.n_paths, seed);
}

PipelineRun run_on_batch(const PipelineConfig& cfg, const JumpGrid& grid, const PathBatch& batch,
                         std::optional<PenalizationIndex> m) {
    const DriverContext ctx = make_context(cfg, grid);
    const Eigen::ArrayXd terminal = evaluate_payoff(batch, cfg.payoff);
    PipelineRun run;
    run.solution = solve(batch, terminal, grid, make_driver(ctx, m), SolverConfig{cfg.partition, std::nullopt});
    run.value = -std::exp(-cfg.utility.lambda * (cfg.utility.x0 - run.solution.y0));
    run.payoff_mean = pairwise_mean(terminal);
    return run;
}

PipelineRun run_pipeline(const PipelineConfig& cfg, std::uint64_t seed) {
    const JumpGrid grid = make_grid(cfg);
    return run_on_batch(cfg, grid, make_batch(cfg, grid, seed));
}

MultiRunResult summarize_runs(std::vector<double> y0) {
    MultiRunResult out;
    out.y0 = std::move(y0);
    if (out.y0.empty()) return out;
    double s = 0.0;
    for (double v : out.y0) s += v;
    out.mean = s / static_cast<double>(out.y0.size());
    const auto [lo, hi] = std::minmax_element(out.y0.begin(), out.y0.end());
    out.spread = *hi - *lo;
    return out;
}

MultiRunResult multi_run(const std::vector<std::uint64_t>& seeds, const PipelineConfig& cfg) {
    if (seeds.size() < 2) throw ConfigError("multi_run needs at least two seeds");
    const JumpGrid grid = make_grid(cfg);
    std::vector<double> y0;
    for (const auto seed : seeds) y0.push_back(run_on_batch(cfg, grid, make_batch(cfg, grid, seed)).solution.y0);
    return summarize_runs(std::move(y0));
}

}  // namespace sigbsde
