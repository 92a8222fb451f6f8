#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sigbsde/pipeline.hpp"

namespace sigbsde {

/// Configuration of a c-sweep. Serialized as JSON with the blocks
/// market, grid, scheme, scenario, payoff, utility and flags.
struct ExperimentConfig {
    LevyMarketSpec market;
    /// kappa = int eta dnu, so that C = 0. Overrides market.kappa.
    bool kappa_compensate = true;
    int q = 20;
    GridLayout layout;
    std::size_t n_steps = 10;
    std::size_t n_paths = 65536;
    PartitionConfig partition;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<SignalKind> variants{SignalKind::hide_small, SignalKind::hide_large};
    std::vector<double> c_values{0.1, 0.3, 0.6, 1.0, 2.0};
    Payoff payoff;
    UtilityParams utility;
    DriverOptions driver;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
    /// kappa after applying the compensate mode.
    [[nodiscard]] double effective_kappa() const;
    [[nodiscard]] PipelineConfig pipeline(const SignalScenario& scenario) const;
};

/// Reference sweep: put with strike 1, T = 1, 65536 paths, 10 steps, 64 cells,
/// 5 seeds, c in {0.1, 0.3, 0.6, 1, 2}, quadratic term without sigma.
[[nodiscard]] ExperimentConfig reference_profile();

[[nodiscard]] ExperimentConfig parse_config(const std::string& text);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON (sorted keys, round-trip precision).
[[nodiscard]] std::string dump_config(const ExperimentConfig& cfg);
/// 64-bit FNV-1a of the canonical dump, as 16 hex digits.
[[nodiscard]] std::string config_hash(const ExperimentConfig& cfg);

struct SweepRow {
    std::string scenario;
    double c = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;
    double y0 = 0.0;
    double value = 0.0;
    double wall_time = 0.0;  ///< seconds
    bool ok = true;
    std::string message;
};

/// Solves every (variant, c, seed). Batches are simulated once per seed and
/// shared across scenarios. A failing point is recorded and the sweep goes on.
[[nodiscard]] std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Columns: scenario,c,seed,config_hash,y0,value,wall_time,status,message
void write_results_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// Throws ConfigError naming the offending line on malformed input.
[[nodiscard]] std::vector<SweepRow> read_results_csv(std::istream& in);

struct SweepSummary {
    std::string scenario;
    double c = 0.0;
    std::size_t runs = 0;
    double mean_y0 = 0.0;
    double spread = 0.0;
    double mean_value = 0.0;
};

/// Seed average per (scenario, c) over successful rows, sorted by scenario then c.
[[nodiscard]] std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& summary);

/// Writes <scenario>.dat (two columns c, mean Y0) per scenario and
/// summary.txt into `dir`. Returns the written paths.
std::vector<std::filesystem::path> write_report(const std::vector<SweepRow>& rows, const std::filesystem::path& dir);

}  // namespace sigbsde
