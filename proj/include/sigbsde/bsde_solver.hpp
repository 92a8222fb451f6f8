#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sigbsde/drivers.hpp"
#include "sigbsde/regression.hpp"
#include "sigbsde/simulate.hpp"

namespace sigbsde {

/// Driver f(z, u) as consumed by the backward scheme.
using DriverFn = std::function<double(double z, const GridFunction& u)>;

/// f (no m) or f_m bound to a context.
[[nodiscard]] DriverFn make_driver(const DriverContext& ctx, std::optional<PenalizationIndex> m = std::nullopt);
/// f(z, u) = value for every argument.
[[nodiscard]] DriverFn constant_driver(double value);

struct SolverConfig {
    PartitionConfig partition;
    /// Optional clip of Y_k into [lower, upper] after every step. Off by default.
    std::optional<std::pair<double, double>> clip;
};

/// Regressed surfaces of one time step.
struct StepSurface {
    BasisPartition partition;
    CellFit y_fit;               ///< E[Y_{k+1} | S_k]
    CellFit z_fit;               ///< Z_k
    std::vector<CellFit> u_fit;  ///< U_k(e_i), one per bin
    Eigen::ArrayXd cell_driver;  ///< driver per cell (constant design only)
};

struct StepResult {
    Eigen::ArrayXd y;
    StepSurface surface;
};

/// One step of the regression scheme:
///   Z = E[Y dW | S_k] / dt,  U_i = E[Y dN~(i) | S_k] / (nu_i dt),
///   Y_k = E[Y | S_k] + dt f(Z, U).
[[nodiscard]] StepResult backward_step(const Eigen::ArrayXd& y_next, const PathBatch& batch, std::size_t k,
                                       const JumpGrid& grid, const PartitionConfig& partition,
                                       const DriverFn& driver);

struct BackwardSolution {
    Eigen::MatrixXd y;                  ///< n_paths x (n_steps + 1), column n is F
    std::vector<StepSurface> steps;     ///< one per k = 0..n-1
    double y0 = 0.0;
    std::size_t singular_cells = 0;     ///< linear-design fallbacks over all steps

    [[nodiscard]] std::size_t n_steps() const { return steps.size(); }
    [[nodiscard]] double z_at(std::size_t k, double s) const;
    [[nodiscard]] GridFunction u_at(std::size_t k, double s) const;
    [[nodiscard]] double max_abs_y() const { return y.cwiseAbs().maxCoeff(); }
    /// max |Z| and max |U_i| over steps and cells.
    [[nodiscard]] double max_abs_z() const;
    [[nodiscard]] double max_abs_u() const;
};

/// Full backward pass from Y_n = F.
[[nodiscard]] BackwardSolution solve(const PathBatch& batch, const Eigen::ArrayXd& terminal, const JumpGrid& grid,
                                     const DriverFn& driver, const SolverConfig& config);

/// Per-step per-cell CSV: k,cell,count,Y,Z,U(-q)..U(q) (cell means).
void write_solution_csv(std::ostream& out, const BackwardSolution& sol, const JumpGrid& grid);

struct ValueAndStrategy {
    double value = 0.0;  ///< -exp(-lambda (x - Y0))
    StrategyTable strategy;
};

/// Optimal value and the feedback strategy p*(g, Z_k(s), U_k(s)).
[[nodiscard]] ValueAndStrategy value_and_strategy(const BackwardSolution& sol, double x0, const DriverContext& ctx);

}  // namespace sigbsde
