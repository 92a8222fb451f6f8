#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sigbsde/levy_model.hpp"

namespace sigbsde {

struct TimeGrid {
    std::vector<double> times;

    static TimeGrid uniform(std::size_t n_steps, double horizon);
    [[nodiscard]] std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
    [[nodiscard]] double dt(std::size_t k) const { return times[k + 1] - times[k]; }
    [[nodiscard]] double horizon() const { return times.back(); }
    void validate() const;
};

using JumpCounts = Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Simulated increments and prices. Rows are paths; jump counts hold one
/// n_paths x n_bins matrix per step.
struct PathBatch {
    std::uint64_t seed = 0;
    std::vector<double> dt;
    Eigen::MatrixXd dW;               ///< n_paths x n_steps
    std::vector<JumpCounts> jumps;    ///< per step, n_paths x n_bins
    Eigen::MatrixXd S;                ///< n_paths x (n_steps + 1)

    [[nodiscard]] std::size_t n_paths() const { return static_cast<std::size_t>(S.rows()); }
    [[nodiscard]] std::size_t n_steps() const { return dt.size(); }
    [[nodiscard]] std::size_t n_bins() const { return jumps.empty() ? 0 : static_cast<std::size_t>(jumps[0].cols()); }

    /// Compensated increment dN_k(i) - nu_i dt_k for every path.
    [[nodiscard]] Eigen::ArrayXd compensated(std::size_t k, std::size_t bin, double weight) const;
};

/// Exact simulation of the market driven by W and the discretized Poisson
/// measure. Each (path, step) draws from its own counter-based stream.
[[nodiscard]] PathBatch simulate_batch(const LevyMarketSpec& spec, const JumpGrid& grid, const TimeGrid& time_grid,
                                       std::size_t n_paths, std::uint64_t seed);

/// CSV with columns path,k,dW,dN(-q)..dN(q),S; row k = n_steps carries S_T.
void write_batch_csv(std::ostream& out, const PathBatch& batch, const JumpGrid& grid);
[[nodiscard]] PathBatch read_batch_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Payoffs F = g(S_T)

[[nodiscard]] double payoff_put(double s_t, double strike);

struct Payoff {
    enum class Kind { put, call, digital, table };
    Kind kind = Kind::put;
    double strike = 1.0;
    /// (S, value) knots for Kind::table; linear in between, flat outside.
    std::vector<std::pair<double, double>> table;

    void validate() const;
    [[nodiscard]] double operator()(double s) const;
    /// Upper bound on |g|.
    [[nodiscard]] double sup_norm() const;
};

[[nodiscard]] std::string to_string(Payoff::Kind kind);
[[nodiscard]] Payoff::Kind parse_payoff_kind(const std::string& name);

[[nodiscard]] Eigen::ArrayXd evaluate_payoff(const PathBatch& batch, const Payoff& payoff);

// ---------------------------------------------------------------------------
// Strategies and wealth

/// Position p(g) held at step k by a path with price s, given the signal g
/// of the jump (g = 0 between jumps or for unrevealed jumps).
class StrategyTable {
public:
    using PositionFn = std::function<double(std::size_t k, double s, double g)>;

    StrategyTable(double pi_lower, double pi_upper, PositionFn fn);

    static StrategyTable constant(double pi_lower, double pi_upper, double p);
    /// p0 when g = 0, otherwise the entry for g (exact key match within 1e-12).
    static StrategyTable from_map(double pi_lower, double pi_upper, double p0, std::map<double, double> by_signal);

    /// Throws DomainError if the position leaves [-pi_lower, pi_upper].
    [[nodiscard]] double position(std::size_t k, double s, double g) const;
    [[nodiscard]] double pi_lower() const { return pi_lower_; }
    [[nodiscard]] double pi_upper() const { return pi_upper_; }

private:
    double pi_lower_;
    double pi_upper_;
    PositionFn fn_;
};

/// Terminal wealth: per step dX = p(0)(kappa dt + sigma dW) + sum_i p(gamma_i) eta_i dN(i)
/// - p(0) (sum_i eta_i nu_i) dt.
[[nodiscard]] Eigen::ArrayXd wealth_forward(const PathBatch& batch, const LevyMarketSpec& spec,
                                            const JumpGrid& grid, const SignalScenario& scenario,
                                            const StrategyTable& strategy, double x0);

struct UtilityEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Sample mean and standard error of -exp(-lambda (X_T - F)).
[[nodiscard]] UtilityEstimate mc_expected_utility(const Eigen::ArrayXd& wealth, const Eigen::ArrayXd& payoff,
                                                  double lambda);

}  // namespace sigbsde
