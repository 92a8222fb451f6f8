// Acceptance run at full scale: one PASS/FAIL line per criterion, details indented below it.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "sigbsde/experiment.hpp"
#include "sigbsde/numerics.hpp"
#include "sigbsde/verify.hpp"

using namespace sigbsde;

namespace {

struct Outcome {
    bool pass = false;
    std::vector<std::string> details;
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out.pass = false;
        out.details.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!out.pass) ++failures;
    std::printf("%s %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", name.c_str(), secs);
    for (const auto& d : out.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
}

std::string line(const CheckReport& r) {
    std::ostringstream s;
    write_reports_text(s, {r});
    std::string t = s.str();
    if (!t.empty() && t.back() == '\n') t.pop_back();
    return t;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

/// Reference profile with the theory driver (sigma inside the square).
ExperimentConfig theory_profile() {
    ExperimentConfig cfg = reference_profile();
    cfg.driver.sigma_in_square = true;
    return cfg;
}

Outcome monotonicity() {
    const ExperimentConfig cfg = reference_profile();
    const auto rows = run_sweep(cfg);
    Outcome out{true, {}};
    for (const auto& r : rows) {
        if (!r.ok) {
            out.pass = false;
            out.details.push_back("failed row " + r.scenario + " c=" + num(r.c) + ": " + r.message);
        }
    }
    const auto summary = summarize(rows);

    // eps_reg: zero-driver regression error on the sweep batches plus the largest seed spread.
    const PipelineConfig base = cfg.pipeline(SignalScenario::no_signal());
    const JumpGrid grid = make_grid(base);
    double zero_err = 0.0;
    for (const auto seed : cfg.seeds) {
        const PathBatch batch = make_batch(base, grid, seed);
        const Eigen::ArrayXd f = evaluate_payoff(batch, base.payoff);
        const double y0 = solve(batch, f, grid, constant_driver(0.0), SolverConfig{base.partition, std::nullopt}).y0;
        zero_err = std::max(zero_err, std::abs(y0 - pairwise_mean(f)));
    }
    double spread = 0.0;
    for (const auto& s : summary) spread = std::max(spread, s.spread);
    const double eps = 3.0 * zero_err + spread;
    out.details.push_back("eps_reg=" + num(eps) + " (zero-driver error " + num(zero_err) + ", max seed spread " +
                          num(spread) + ")");

    for (const auto kind : {SignalKind::hide_small, SignalKind::hide_large}) {
        const std::string name = to_string(kind);
        std::vector<SweepSummary> seq;
        for (const auto& s : summary) {
            if (s.scenario == name) seq.push_back(s);
        }
        std::string text = name + " mean Y0:";
        double worst = INFINITY;
        for (std::size_t j = 0; j < seq.size(); ++j) {
            text += " c=" + num(seq[j].c) + ":" + num(seq[j].mean_y0);
            if (j == 0) continue;
            const double step = seq[j].mean_y0 - seq[j - 1].mean_y0;
            worst = std::min(worst, kind == SignalKind::hide_small ? step : -step);
        }
        if (seq.size() != cfg.c_values.size() || worst < -eps) out.pass = false;
        out.details.push_back(text);
        out.details.push_back(name + (kind == SignalKind::hide_small ? " nondecreasing" : " nonincreasing") +
                              ", worst step " + num(worst) + " vs -eps_reg " + num(-eps));
    }
    return out;
}

Outcome scenario_limits() {
    Outcome out{true, {}};
    const ExperimentConfig cfg = reference_profile();
    const PipelineConfig none = cfg.pipeline(SignalScenario::no_signal());
    const JumpGrid grid = make_grid(none);
    const double e_q = grid.marks()(static_cast<Eigen::Index>(grid.position(grid.q())));
    const PipelineConfig small = cfg.pipeline(SignalScenario::hide_small(1.5 * e_q));
    const PipelineConfig large = cfg.pipeline(SignalScenario::hide_large(0.5 * grid.inner_edge()));

    const CheckReport r = check_scenario_limits(1000, none.market, grid, none.utility, none.driver, 11);
    out.pass = r.pass && r.samples == 1000;
    out.details.push_back(line(r));

    const PathBatch batch = make_batch(none, grid, 1);
    const double y_none = run_on_batch(none, grid, batch).solution.y0;
    const double y_small = run_on_batch(small, grid, batch).solution.y0;
    const double y_large = run_on_batch(large, grid, batch).solution.y0;
    const bool bitwise = y_none == y_small && y_none == y_large;
    out.pass = out.pass && bitwise;
    char buf[160];
    std::snprintf(buf, sizeof buf, "Y0 no_signal=%.17g hide_small(c=%.3g)=%.17g hide_large(c=%.3g)=%.17g", y_none,
                  small.scenario.c, y_small, large.scenario.c, y_large);
    out.details.push_back(buf);
    return out;
}

Outcome driver_suite() {
    Outcome out{true, {}};
    const ExperimentConfig cfg = reference_profile();
    std::uint64_t seed = 100;
    for (const auto sc : {SignalScenario::no_signal(), SignalScenario::hide_small(0.3), SignalScenario::hide_large(0.3)}) {
        const PipelineConfig p = cfg.pipeline(sc);
        const DriverContext ctx = make_context(p, make_grid(p));
        for (CheckReport r : {check_driver_sandwich(1000, ctx, seed++), check_fm_monotone(1000, ctx, seed++),
                              check_lipschitz_z(1000, ctx, seed++)}) {
            r.name = sc.name() + "/" + r.name;
            out.pass = out.pass && r.pass && r.violations == 0 && r.samples == 1000;
            out.details.push_back(line(r));
        }
    }
    // The sandwich must catch a sign-flipped driver.
    const PipelineConfig p = cfg.pipeline(SignalScenario::hide_small(0.3));
    const DriverContext ctx = make_context(p, make_grid(p));
    const CheckReport flipped = check_driver_sandwich(1000, ctx, 1, [&ctx](double z, const GridFunction& u, int m) {
        return -penalized_driver_fm(z, u, PenalizationIndex(m), ctx);
    });
    out.pass = out.pass && flipped.violations > 0;
    out.details.push_back("self-test: sign-flipped driver gives " + std::to_string(flipped.violations) +
                          " violations (must be > 0)");
    return out;
}

Outcome comparison() {
    Outcome out{true, {}};
    const ExperimentConfig cfg = reference_profile();
    for (const auto sc : {SignalScenario::hide_small(0.3), SignalScenario::hide_large(0.3)}) {
        const PipelineConfig p = cfg.pipeline(sc);
        const EpsReg eps = calibrate_eps_reg(p, kSeeds);
        const JumpGrid grid = make_grid(p);
        const PathBatch batch = make_batch(p, grid, 1);
        const SolverConfig solver{p.partition, std::nullopt};
        const Eigen::ArrayXd f = evaluate_payoff(batch, p.payoff);
        const DriverFn drv = make_driver(make_context(p, grid));
        const double delta = 0.05;
        const DriverFn shifted = [drv, delta](double z, const GridFunction& u) { return drv(z, u) + delta; };
        Payoff lower = p.payoff;
        lower.strike = 0.9;
        const Eigen::ArrayXd f_low = evaluate_payoff(batch, lower);
        std::vector<CheckReport> reports{
            check_comparison(batch, grid, f, f, drv, shifted, solver, eps.value, delta * p.market.T, "driver_shift"),
            check_comparison(batch, grid, f_low, f, drv, drv, solver, eps.value, std::nullopt, "strike_0.9_vs_1.0"),
            check_comparison(batch, grid, f_low, f, drv, shifted, solver, eps.value, std::nullopt, "both_ordered"),
            check_comparison(batch, grid, f, f, drv, drv, solver, 0.0, 0.0, "identical")};
        out.details.push_back(sc.name() + "(c=" + num(sc.c) + ") eps_reg=" + num(eps.value));
        for (auto& r : reports) {
            r.name = sc.name() + "/" + r.name;
            out.pass = out.pass && r.pass;
            out.details.push_back(line(r));
        }
    }
    return out;
}

Outcome penalization() {
    Outcome out{true, {}};
    const ExperimentConfig cfg = reference_profile();
    for (const auto sc : {SignalScenario::no_signal(), SignalScenario::hide_small(0.3), SignalScenario::hide_large(0.3)}) {
        const PipelineConfig p = cfg.pipeline(sc);
        const EpsReg eps = calibrate_eps_reg(p, kSeeds);
        const JumpGrid grid = make_grid(p);
        CheckReport r = check_penalization_convergence(p, make_batch(p, grid, 1), eps.value, 20);
        r.name = sc.name() + "/" + r.name;
        out.pass = out.pass && r.pass;
        out.details.push_back(line(r) + " eps_reg=" + num(eps.value));
    }
    return out;
}

Outcome optimality() {
    Outcome out{true, {}};
    const ExperimentConfig cfg = theory_profile();
    for (const auto sc : {SignalScenario::no_signal(), SignalScenario::hide_small(0.3), SignalScenario::hide_large(0.3)}) {
        const PipelineConfig p = cfg.pipeline(sc);
        const EpsReg eps = calibrate_eps_reg(p, kSeeds);
        OptimalityOptions opts;
        opts.train_seed = 1;
        opts.test_seed = 1'000'003;
        opts.extra_shifts = {0.1, -0.1, 0.0};
        CheckReport r = check_martingale_optimality(p, eps.value, opts);
        r.name = sc.name() + "/" + r.name;
        out.pass = out.pass && r.pass;
        out.details.push_back(line(r) + " eps_reg=" + num(eps.value));
    }
    return out;
}

Outcome scheme_oracles() {
    Outcome out{true, {}};
    const ExperimentConfig cfg = reference_profile();
    for (const auto sc : {SignalScenario::no_signal(), SignalScenario::hide_small(0.3), SignalScenario::hide_large(0.3)}) {
        const PipelineConfig p = cfg.pipeline(sc);
        const JumpGrid grid = make_grid(p);
        const EpsReg eps = calibrate_eps_reg(p, kSeeds);
        for (const auto seed : kSeeds) {
            const PathBatch batch = make_batch(p, grid, seed);
            CheckReport oracle = check_scheme_oracles(p, batch, 0.05);
            CheckReport bound = check_solution_bound(p, run_on_batch(p, grid, batch).solution, eps.value);
            out.pass = out.pass && oracle.pass && bound.pass;
            if (seed == kSeeds.front() || !oracle.pass || !bound.pass) {
                oracle.name = sc.name() + "/seed" + std::to_string(seed) + "/" + oracle.name;
                bound.name = sc.name() + "/seed" + std::to_string(seed) + "/" + bound.name;
                out.details.push_back(line(oracle));
                out.details.push_back(line(bound));
            }
        }
    }
    return out;
}

}  // namespace

int main() {
    std::printf("acceptance: reference profile, %zu paths, %zu steps, %d cells, seeds 1..5, threads=%u\n",
                reference_profile().n_paths, reference_profile().n_steps, reference_profile().partition.cells, worker_count());
    criterion("[1] monotonicity in c", monotonicity);
    criterion("[2] scenario-limit exactness", scenario_limits);
    criterion("[3] driver property suite (sandwich, f_m monotone, local Lipschitz)", driver_suite);
    criterion("[4] comparison oracle", comparison);
    criterion("[5] penalization convergence", penalization);
    criterion("[6] martingale optimality", optimality);
    criterion("[7] scheme oracles and solution bound", scheme_oracles);
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
