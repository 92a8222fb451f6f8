#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sigbsde/bsde_solver.hpp"
#include "sigbsde/errors.hpp"
#include "sigbsde/numerics.hpp"
#include "sigbsde/pipeline.hpp"

using namespace sigbsde;

namespace {

PipelineConfig small_config(std::size_t paths = 8192) {
    PipelineConfig cfg;
    cfg.n_paths = paths;
    // Keep at least 512 paths per cell: sparser cells make the U estimates too noisy for the exponential driver.
    cfg.partition.cells = static_cast<int>(paths / 512);
    cfg.scenario = SignalScenario::hide_small(0.3);
    return cfg;
}

double poisson_pmf(int k, double mean) { return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0)); }

}  // namespace

TEST_CASE("constant drivers telescope exactly") {
    const PipelineConfig cfg = small_config();
    const JumpGrid grid = make_grid(cfg);
    const PathBatch batch = make_batch(cfg, grid, 1);
    const Eigen::ArrayXd f = evaluate_payoff(batch, cfg.payoff);
    const SolverConfig solver{cfg.partition, std::nullopt};
    const BackwardSolution zero = solve(batch, f, grid, constant_driver(0.0), solver);
    CHECK(std::abs(zero.y0 - pairwise_mean(f)) < 1e-12);
    const BackwardSolution c0 = solve(batch, f, grid, constant_driver(0.05), solver);
    CHECK(std::abs(c0.y0 - pairwise_mean(f) - 0.05) < 1e-12);
    CHECK(zero.n_steps() == 10);
}

TEST_CASE("constant terminal value is a fixed point of the zero driver") {
    const PipelineConfig cfg = small_config(4096);
    const JumpGrid grid = make_grid(cfg);
    const PathBatch batch = make_batch(cfg, grid, 2);
    const BackwardSolution sol = solve(batch, Eigen::ArrayXd::Constant(4096, 0.3), grid, constant_driver(0.0),
                                       SolverConfig{cfg.partition, std::nullopt});
    CHECK((sol.y.array() - 0.3).abs().maxCoeff() < 1e-15);
    // Z is 0.3 times an in-cell mean of dW / dt: noise only, 512 paths per cell.
    CHECK(sol.max_abs_z() < 6.0 * 0.3 * std::sqrt(0.1 / 512.0) / 0.1);
}

TEST_CASE("zero solution in the trivial market") {
    PipelineConfig cfg = small_config(2048);
    cfg.market.rho = 0.0;
    cfg.scenario = SignalScenario::no_signal();
    cfg.payoff = Payoff{Payoff::Kind::table, 1.0, {{0.0, 0.0}, {1.0, 0.0}}};
    const PipelineRun run = run_pipeline(cfg, 3);
    CHECK(std::abs(run.solution.y0) < 1e-12);
    CHECK(run.value == doctest::Approx(-1.0));
}

TEST_CASE("constant payoff in a Brownian market") {
    // No jumps and one cell: Z is the sample mean of 0.4 dW / dt, well inside |z| <= sigma where f vanishes.
    PipelineConfig cfg = small_config(16384);
    cfg.market.rho = 0.0;
    cfg.partition.cells = 1;
    cfg.scenario = SignalScenario::no_signal();
    cfg.payoff = Payoff{Payoff::Kind::table, 1.0, {{0.0, 0.4}, {1.0, 0.4}}};
    const PipelineRun run = run_pipeline(cfg, 4);
    CHECK(std::abs(run.solution.y0 - 0.4) < 1e-12);

    // With drift, f(0, 0) = min_p (lambda/2)(sigma p - C/lambda)^2 - C^2/(2 lambda) at the clamped vertex.
    cfg.market.kappa = 0.02;
    const JumpGrid grid = make_grid(cfg);
    const DriverContext ctx = make_context(cfg, grid);
    const double f00 = driver_f(0.0, GridFunction::Zero(static_cast<Eigen::Index>(grid.size())), ctx).value;
    const double c = ctx.c_const();
    const double p = std::clamp(c / (0.4 * 0.2), -1.0, 1.0);
    CHECK(f00 == doctest::Approx(0.2 * std::pow(0.2 * p - c / 0.4, 2) - c * c / 0.8).epsilon(1e-9));
    const PipelineRun drift = run_pipeline(cfg, 4);
    CHECK(std::abs(drift.solution.y0 - (0.4 + f00)) < 2e-3);
}

TEST_CASE("one-step scheme against an enumeration oracle") {
    LevyMarketSpec spec;
    spec.rho = 0.3;
    const JumpGrid grid(spec, {0.2, 0.7});
    PipelineConfig cfg;
    cfg.market = spec;
    cfg.n_steps = 1;
    cfg.n_paths = 1 << 19;
    cfg.scenario = SignalScenario::hide_large(0.5);
    const double T = 1.0;
    const std::size_t bins = grid.size();
    const Eigen::ArrayXd& nu = grid.weights();
    const Eigen::ArrayXd log_jump = (1.0 + grid.eta_values()).log();
    const double drift = -0.5 * spec.sigma * spec.sigma - (grid.eta_values() * nu).sum();

    // E[F], E[F W], E[F (N_i - nu_i T)] by enumerating counts and integrating W.
    double ef = 0.0, efw = 0.0;
    Eigen::ArrayXd efn = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(bins));
    const int kmax = 6;
    const int nw = 4001;
    const double wmax = 9.0 * std::sqrt(T);
    const double h = 2.0 * wmax / (nw - 1);
    std::vector<int> n(bins, 0);
    std::function<void(std::size_t, double, double)> rec = [&](std::size_t b, double prob, double logj) {
        if (b == bins) {
            for (int j = 0; j < nw; ++j) {
                const double w = -wmax + h * j;
                const double weight = (j == 0 || j == nw - 1 ? 1.0 : (j % 2 ? 4.0 : 2.0)) * h / 3.0 *
                                      std::exp(-0.5 * w * w / T) / std::sqrt(2.0 * M_PI * T);
                const double f = payoff_put(std::exp(drift * T + spec.sigma * w + logj), 1.0) * prob * weight;
                ef += f;
                efw += f * w;
                for (std::size_t i = 0; i < bins; ++i)
                    efn(static_cast<Eigen::Index>(i)) += f * (n[i] - nu(static_cast<Eigen::Index>(i)) * T);
            }
            return;
        }
        for (int k = 0; k <= kmax; ++k) {
            n[b] = k;
            rec(b + 1, prob * poisson_pmf(k, nu(static_cast<Eigen::Index>(b)) * T), logj + k * log_jump(static_cast<Eigen::Index>(b)));
        }
        n[b] = 0;
    };
    rec(0, 1.0, 0.0);
    const DriverContext ctx(spec, grid, cfg.scenario, cfg.utility, cfg.driver);
    const GridFunction u = efn / (nu * T);
    const double oracle = ef + T * driver_f(efw / T, u, ctx).value;

    const PathBatch batch = simulate_batch(spec, grid, TimeGrid::uniform(1, T), cfg.n_paths, 21);
    const Eigen::ArrayXd f = evaluate_payoff(batch, cfg.payoff);
    const BackwardSolution sol = solve(batch, f, grid, make_driver(ctx), SolverConfig{cfg.partition, std::nullopt});
    CHECK(std::abs(sol.y0 - oracle) < 1e-3);
    // The scheme itself: one cell at t = 0, so Y0 = mean F + T f(mean(F dW)/T, mean(F dN~)/(nu T)).
    CHECK(sol.steps[0].partition.cell_count() == 1);
    CHECK(std::abs(sol.z_at(0, 1.0) - pairwise_mean((f * batch.dW.col(0).array()).eval()) / T) < 1e-14);
}

TEST_CASE("solution export and strategy extraction") {
    const PipelineConfig cfg = small_config(4096);
    const JumpGrid grid = make_grid(cfg);
    const PipelineRun run = run_pipeline(cfg, 5);
    std::ostringstream out;
    write_solution_csv(out, run.solution, grid);
    const std::string text = out.str();
    CHECK(text.rfind("k,cell,count,Y,Z,U(-20)", 0) == 0);
    CHECK(std::isfinite(run.solution.y0));

    const DriverContext ctx = make_context(cfg, grid);
    const ValueAndStrategy vs = value_and_strategy(run.solution, 0.0, ctx);
    CHECK(vs.value == doctest::Approx(-std::exp(0.4 * run.solution.y0)));
    for (std::size_t k = 0; k < 10; ++k) {
        CHECK(vs.strategy.position(k, 1.0, 0.99) == 1.0);
        CHECK(vs.strategy.position(k, 1.0, -0.99) == -1.0);
        const double p0 = vs.strategy.position(k, 1.0, 0.0);
        CHECK(p0 >= -1.0);
        CHECK(p0 <= 1.0);
    }
    CHECK(value_and_strategy(BackwardSolution{}, 0.0, ctx).value == doctest::Approx(-1.0));
}

TEST_CASE("seed stability") {
    const PipelineConfig cfg = small_config(4096);
    const MultiRunResult same = multi_run({7, 7}, cfg);
    CHECK(same.spread == 0.0);
    const MultiRunResult diff = multi_run({1, 2, 3}, cfg);
    CHECK(diff.spread > 0.0);
    CHECK(diff.spread < 0.1);
    CHECK_THROWS_AS((void)multi_run({1}, cfg), ConfigError);
}

TEST_CASE("linear design") {
    PipelineConfig cfg = small_config(8192);
    cfg.partition.design = Design::linear;
    const JumpGrid grid = make_grid(cfg);
    const PathBatch batch = make_batch(cfg, grid, 1);
    const Eigen::ArrayXd f = evaluate_payoff(batch, cfg.payoff);
    const SolverConfig solver{cfg.partition, std::nullopt};
    // Least squares with an intercept preserves the sample mean, so constant drivers still telescope.
    CHECK(std::abs(solve(batch, f, grid, constant_driver(0.0), solver).y0 - pairwise_mean(f)) < 1e-12);
    CHECK(std::abs(solve(batch, f, grid, constant_driver(0.05), solver).y0 - pairwise_mean(f) - 0.05) < 1e-12);
    // In-cell slopes of the jump targets are noisy enough to drive the exponential driver past the
    // overflow guard; the scheme reports it instead of saturating.
    try {
        (void)solve(batch, f, grid, make_driver(make_context(cfg, grid)), solver);
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("backward step k=") != std::string::npos);
    }
}

TEST_CASE("optional clip") {
    const PipelineConfig cfg = small_config(2048);
    const JumpGrid grid = make_grid(cfg);
    const PathBatch batch = make_batch(cfg, grid, 1);
    const Eigen::ArrayXd f = evaluate_payoff(batch, cfg.payoff);
    const BackwardSolution sol = solve(batch, f, grid, constant_driver(1.0), SolverConfig{cfg.partition, std::pair{-0.1, 0.1}});
    CHECK(sol.y.leftCols(10).maxCoeff() <= 0.1);
}
