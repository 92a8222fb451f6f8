#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sigbsde/bsde_solver.hpp"

namespace sigbsde {

/// Everything needed to go from a seed to Y0 for one scenario.
struct PipelineConfig {
    LevyMarketSpec market;
    int q = 20;
    GridLayout layout;
    std::size_t n_steps = 10;
    std::size_t n_paths = 65536;
    PartitionConfig partition;
    Payoff payoff;
    UtilityParams utility;
    DriverOptions driver;
    SignalScenario scenario;
};

[[nodiscard]] JumpGrid make_grid(const PipelineConfig& cfg);
[[nodiscard]] DriverContext make_context(const PipelineConfig& cfg, const JumpGrid& grid);
[[nodiscard]] PathBatch make_batch(const PipelineConfig& cfg, const JumpGrid& grid, std::uint64_t seed);

struct PipelineRun {
    BackwardSolution solution;
    double value = 0.0;  ///< V(x) = -exp(-lambda (x - Y0))
    double payoff_mean = 0.0;
};

/// Solve with an existing batch (scenario sweeps share batches across c).
[[nodiscard]] PipelineRun run_on_batch(const PipelineConfig& cfg, const JumpGrid& grid, const PathBatch& batch,
                                       std::optional<PenalizationIndex> m = std::nullopt);
[[nodiscard]] PipelineRun run_pipeline(const PipelineConfig& cfg, std::uint64_t seed);

struct MultiRunResult {
    std::vector<double> y0;
    double mean = 0.0;
    double spread = 0.0;  ///< max - min
};

/// Y0 over several independent seeds.
[[nodiscard]] MultiRunResult multi_run(const std::vector<std::uint64_t>& seeds, const PipelineConfig& cfg);
[[nodiscard]] MultiRunResult summarize_runs(std::vector<double> y0);

}  // namespace sigbsde
