#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sigbsde/pipeline.hpp"

namespace sigbsde {

/// Outcome of one executable property check. A margin is the signed slack of
/// the tested inequality; negative beyond the tolerance is a violation.
struct CheckReport {
    std::string name;
    std::size_t samples = 0;
    std::size_t violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;

    /// Records one sample; returns false on violation.
    bool record(double margin, double tol);
    CheckReport& finish();
};

/// f_m(z, u) with m given as a plain integer, for injecting faulty drivers.
using PenalizedDriverFn = std::function<double(double z, const GridFunction& u, int m)>;

struct SampleBox {
    double z_lo = -5.0;
    double z_hi = 5.0;
    double u_lo = -2.0;
    double u_hi = 2.0;
    int m_max = 20;
};

[[nodiscard]] CheckReport check_driver_sandwich(std::size_t n_samples, const DriverContext& ctx, std::uint64_t seed,
                                                const PenalizedDriverFn& fm = {}, const SampleBox& box = {});

[[nodiscard]] CheckReport check_fm_monotone(std::size_t n_samples, const DriverContext& ctx, std::uint64_t seed,
                                            const SampleBox& box = {});

/// Local Lipschitz bound in z with local_lipschitz_constant(ctx) * inflate.
[[nodiscard]] CheckReport check_lipschitz_z(std::size_t n_samples, const DriverContext& ctx, std::uint64_t seed,
                                            double inflate = 1.0, const SampleBox& box = {});

/// hide_small above the grid and hide_large below the innermost bin edge must
/// reproduce the no-signal driver exactly.
[[nodiscard]] CheckReport check_scenario_limits(std::size_t n_samples, const LevyMarketSpec& spec,
                                                const JumpGrid& grid, const UtilityParams& utility,
                                                const DriverOptions& options, std::uint64_t seed,
                                                const SampleBox& box = {});

/// Ordered terminals and drivers give ordered Y0 within eps_reg. With
/// `expected_gap`, also |gap - expected| <= eps_reg + 1e-10.
[[nodiscard]] CheckReport check_comparison(const PathBatch& batch, const JumpGrid& grid,
                                           const Eigen::ArrayXd& terminal_low, const Eigen::ArrayXd& terminal_high,
                                           const DriverFn& driver_low, const DriverFn& driver_high,
                                           const SolverConfig& config, double eps_reg,
                                           std::optional<double> expected_gap = std::nullopt,
                                           std::string name = "comparison");

struct OptimalityOptions {
    double delta = 0.25;
    std::uint64_t train_seed = 1;
    std::uint64_t test_seed = 1'000'003;
    /// Extra position shifts to test besides +-delta (0 gives the identity).
    std::vector<double> extra_shifts;
};

/// The extracted p* dominates perturbed and constant strategies on a fresh
/// batch and matches u(x - Y0).
[[nodiscard]] CheckReport check_martingale_optimality(const PipelineConfig& cfg, double eps_reg,
                                                      const OptimalityOptions& options = {});

struct EpsReg {
    double value = 0.0;
    double zero_driver_error = 0.0;  ///< max |Y0 - mean(F)| with f = 0
    double seed_spread = 0.0;        ///< spread of Y0 over seeds with the real driver
};

/// eps_reg = 3 max|Y0 - mean F| (zero driver) + seed spread (configured driver).
[[nodiscard]] EpsReg calibrate_eps_reg(const PipelineConfig& cfg, const std::vector<std::uint64_t>& seeds);

/// Y0 under f_m is nondecreasing in m = 1..m_max within eps_reg and equals Y0
/// under f (to 1e-12) once every truncation is inactive.
[[nodiscard]] CheckReport check_penalization_convergence(const PipelineConfig& cfg, const PathBatch& batch,
                                                         double eps_reg, int m_max = 20);

/// f = 0 gives mean(F), f = c0 gives mean(F) + c0 T, both to 1e-12.
[[nodiscard]] CheckReport check_scheme_oracles(const PipelineConfig& cfg, const PathBatch& batch, double c0 = 0.05);

/// max |Y_k| against the a priori bound of the exponential-utility BSDE.
[[nodiscard]] CheckReport check_solution_bound(const PipelineConfig& cfg, const BackwardSolution& sol, double eps_reg);

struct VerifyOptions {
    std::size_t n_samples = 1000;
    std::uint64_t sample_seed = 7;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

/// All checks with the given configuration.
[[nodiscard]] std::vector<CheckReport> run_verify_suite(const PipelineConfig& cfg, const VerifyOptions& options);

void write_reports_text(std::ostream& out, const std::vector<CheckReport>& reports);
void write_reports_csv(std::ostream& out, const std::vector<CheckReport>& reports);

}  // namespace sigbsde
