#include "sigbsde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "sigbsde/errors.hpp"
#include "sigbsde/numerics.hpp"

namespace sigbsde {

bool CheckReport::record(double margin, double tol) {
    ++samples;
    tolerance = std::max(tolerance, tol);
    worst_margin = std::min(worst_margin, margin);
    if (margin < -tol || std::isnan(margin)) {
        ++violations;
        return false;
    }
    return true;
}

CheckReport& CheckReport::finish() {
    pass = violations == 0 && samples > 0;
    return *this;
}

namespace {

double rel_tol(double scale) { return 1e-12 * std::max(1.0, std::abs(scale)); }

struct Sampler {
    std::mt19937_64 rng;
    const SampleBox& box;

    double z() { return std::uniform_real_distribution<double>(box.z_lo, box.z_hi)(rng); }
    GridFunction u(std::size_t n) {
        std::uniform_real_distribution<double> dist(box.u_lo, box.u_hi);
        GridFunction out(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = dist(rng);
        return out;
    }
    int m() { return std::uniform_int_distribution<int>(1, box.m_max)(rng); }
};

std::string fmt(const char* label, double v) {
    std::ostringstream s;
    s.precision(6);
    s << label << '=' << v;
    return s.str();
}

}  // namespace

CheckReport check_driver_sandwich(std::size_t n_samples, const DriverContext& ctx, std::uint64_t seed,
                                  const PenalizedDriverFn& fm, const SampleBox& box) {
    const PenalizedDriverFn f = fm ? fm : PenalizedDriverFn([&ctx](double z, const GridFunction& u, int m) {
        return penalized_driver_fm(z, u, PenalizationIndex(m), ctx);
    });
    CheckReport report{.name = "driver_sandwich"};
    Sampler s{std::mt19937_64(seed), box};
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double z = s.z();
        const GridFunction u = s.u(ctx.grid().size());
        const int m = s.m();
        const double v = f(z, u, m);
        const DriverBounds b = driver_bounds(z, u, ctx);
        report.record(std::min(v - b.lower, b.upper - v), rel_tol(v));
    }
    return report.finish();
}

CheckReport check_fm_monotone(std::size_t n_samples, const DriverContext& ctx, std::uint64_t seed,
                              const SampleBox& box) {
    CheckReport report{.name = "fm_monotone"};
    Sampler s{std::mt19937_64(seed), box};
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double z = s.z();
        const GridFunction u = s.u(ctx.grid().size());
        const int m = std::uniform_int_distribution<int>(1, std::max(1, box.m_max - 1))(s.rng);
        const double lo = penalized_driver_fm(z, u, PenalizationIndex(m), ctx);
        const double hi = penalized_driver_fm(z, u, PenalizationIndex(m + 1), ctx);
        report.record(hi - lo, rel_tol(lo));
    }
    return report.finish();
}

CheckReport check_lipschitz_z(std::size_t n_samples, const DriverContext& ctx, std::uint64_t seed, double inflate,
                              const SampleBox& box) {
    CheckReport report{.name = "lipschitz_z"};
    const double K = local_lipschitz_constant(ctx) * inflate;
    Sampler s{std::mt19937_64(seed), box};
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double z1 = s.z();
        const double z2 = s.z();
        const GridFunction u = s.u(ctx.grid().size());
        const double f1 = driver_f(z1, u, ctx).value;
        const double f2 = driver_f(z2, u, ctx).value;
        const double bound = K * (1.0 + std::abs(z1) + std::abs(z2)) * std::abs(z1 - z2);
        report.record(bound - std::abs(f1 - f2), rel_tol(std::max(std::abs(f1), std::abs(f2))));
    }
    report.detail = fmt("K", K);
    return report.finish();
}

CheckReport check_scenario_limits(std::size_t n_samples, const LevyMarketSpec& spec, const JumpGrid& grid,
                                  const UtilityParams& utility, const DriverOptions& options, std::uint64_t seed,
                                  const SampleBox& box) {
    const double e_q = grid.marks()(static_cast<Eigen::Index>(grid.position(grid.q())));
    const DriverContext none(spec, grid, SignalScenario::no_signal(), utility, options);
    const DriverContext small(spec, grid, SignalScenario::hide_small(2.0 * e_q), utility, options);
    const DriverContext large(spec, grid, SignalScenario::hide_large(0.5 * grid.inner_edge()), utility, options);
    CheckReport report{.name = "scenario_limits"};
    Sampler s{std::mt19937_64(seed), box};
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double z = s.z();
        const GridFunction u = s.u(grid.size());
        const DriverValue a = driver_f(z, u, none);
        const DriverValue b = driver_f(z, u, small);
        const DriverValue c = driver_f(z, u, large);
        const bool same = a.value == b.value && a.value == c.value && a.p_default == b.p_default &&
                          a.p_default == c.p_default;
        report.record(same ? 0.0 : -std::max(std::abs(a.value - b.value), std::abs(a.value - c.value)), 0.0);
    }
    return report.finish();
}

CheckReport check_comparison(const PathBatch& batch, const JumpGrid& grid, const Eigen::ArrayXd& terminal_low,
                             const Eigen::ArrayXd& terminal_high, const DriverFn& driver_low,
                             const DriverFn& driver_high, const SolverConfig& config, double eps_reg,
                             std::optional<double> expected_gap, std::string name) {
    CheckReport report{.name = std::move(name)};
    if ((terminal_high < terminal_low).any()) throw DomainError("check_comparison: terminals are not ordered");
    const double y_low = solve(batch, terminal_low, grid, driver_low, config).y0;
    const double y_high = solve(batch, terminal_high, grid, driver_high, config).y0;
    const double gap = y_high - y_low;
    report.record(gap, eps_reg);
    if (expected_gap) report.record(eps_reg + 1e-10 - std::abs(gap - *expected_gap), 0.0);
    report.detail = fmt("gap", gap);
    return report.finish();
}

CheckReport check_martingale_optimality(const PipelineConfig& cfg, double eps_reg, const OptimalityOptions& options) {
    CheckReport report{.name = "martingale_optimality"};
    const JumpGrid grid = make_grid(cfg);
    const DriverContext ctx = make_context(cfg, grid);
    const PathBatch train = make_batch(cfg, grid, options.train_seed);
    const PipelineRun run = run_on_batch(cfg, grid, train);
    const ValueAndStrategy opt = value_and_strategy(run.solution, cfg.utility.x0, ctx);

    const PathBatch test = make_batch(cfg, grid, options.test_seed);
    const Eigen::ArrayXd terminal = evaluate_payoff(test, cfg.payoff);
    const double lambda = cfg.utility.lambda;
    auto utility_samples = [&](const StrategyTable& st) {
        const Eigen::ArrayXd x = wealth_forward(test, cfg.market, grid, cfg.scenario, st, cfg.utility.x0);
        return Eigen::ArrayXd(-(-lambda * (x - terminal)).exp());
    };
    const Eigen::ArrayXd u_star = utility_samples(opt.strategy);
    const UtilityEstimate est_star =
        mc_expected_utility(wealth_forward(test, cfg.market, grid, cfg.scenario, opt.strategy, cfg.utility.x0),
                            terminal, lambda);

    const double lo = cfg.utility.pi_lower;
    const double hi = cfg.utility.pi_upper;
    std::vector<std::pair<std::string, StrategyTable>> rivals;
    std::vector<double> shifts{options.delta, -options.delta};
    shifts.insert(shifts.end(), options.extra_shifts.begin(), options.extra_shifts.end());
    for (const double d : shifts) {
        rivals.emplace_back("shift" + std::to_string(d),
                            StrategyTable(lo, hi, [d, lo, hi, base = opt.strategy](std::size_t k, double s, double g) {
                                return std::clamp(base.position(k, s, g) + d, -lo, hi);
                            }));
    }
    rivals.emplace_back("const0", StrategyTable::constant(lo, hi, 0.0));
    rivals.emplace_back("const_upper", StrategyTable::constant(lo, hi, hi));
    rivals.emplace_back("const_lower", StrategyTable::constant(lo, hi, -lo));

    std::ostringstream detail;
    detail.precision(6);
    detail << "E[u*]=" << est_star.mean << " se=" << est_star.std_error;
    for (const auto& [label, st] : rivals) {
        // Standard error of the paired difference on the shared test batch.
        const Eigen::ArrayXd diff = u_star - utility_samples(st);
        const double mean = pairwise_mean(diff);
        const auto n = static_cast<double>(diff.size());
        const double se = std::sqrt(pairwise_sum((diff - mean).square().eval()) / (n - 1.0) / n);
        report.record(mean + 3.0 * se, 0.0);
        detail << ' ' << label << ":d=" << mean << "/se=" << se;
    }
    const double target = -std::exp(-lambda * (cfg.utility.x0 - run.solution.y0));
    report.record(3.0 * (est_star.std_error + eps_reg) - std::abs(est_star.mean - target), 0.0);
    detail << " u(x-Y0)=" << target;
    report.detail = detail.str();
    return report.finish();
}

EpsReg calibrate_eps_reg(const PipelineConfig& cfg, const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw ConfigError("calibrate_eps_reg needs at least one seed");
    const JumpGrid grid = make_grid(cfg);
    const DriverContext ctx = make_context(cfg, grid);
    const SolverConfig solver{cfg.partition, std::nullopt};
    EpsReg out;
    std::vector<double> y0;
    for (const auto seed : seeds) {
        const PathBatch batch = make_batch(cfg, grid, seed);
        const Eigen::ArrayXd terminal = evaluate_payoff(batch, cfg.payoff);
        const double zero = solve(batch, terminal, grid, constant_driver(0.0), solver).y0;
        out.zero_driver_error = std::max(out.zero_driver_error, std::abs(zero - pairwise_mean(terminal)));
        y0.push_back(solve(batch, terminal, grid, make_driver(ctx), solver).y0);
    }
    out.seed_spread = summarize_runs(y0).spread;
    out.value = 3.0 * out.zero_driver_error + out.seed_spread;
    return out;
}

CheckReport check_penalization_convergence(const PipelineConfig& cfg, const PathBatch& batch, double eps_reg,
                                           int m_max) {
    CheckReport report{.name = "penalization_convergence"};
    const JumpGrid grid = make_grid(cfg);
    const PipelineRun full = run_on_batch(cfg, grid, batch);
    double prev = -std::numeric_limits<double>::infinity();
    std::ostringstream detail;
    detail.precision(10);
    for (int m = 1; m <= m_max; ++m) {
        const double y0 = run_on_batch(cfg, grid, batch, PenalizationIndex(m)).solution.y0;
        if (m > 1) report.record(y0 - prev, eps_reg);
        prev = y0;
        if (m == 1 || m == m_max) detail << "Y0(m=" << m << ")=" << y0 << ' ';
    }
    // Past every truncation threshold f_m coincides with f on all scheme inputs.
    const double e1 = grid.marks()(static_cast<Eigen::Index>(grid.position(1)));
    const double reach = std::max({1.0 / e1, full.solution.max_abs_z(),
                                   full.solution.max_abs_u() + std::max(cfg.utility.pi_lower, cfg.utility.pi_upper)});
    const int m_star = static_cast<int>(std::floor(reach)) + 1;
    const double y_star = run_on_batch(cfg, grid, batch, PenalizationIndex(m_star)).solution.y0;
    report.record(1e-12 - std::abs(y_star - full.solution.y0), 0.0);
    detail << "Y0(m*=" << m_star << ")=" << y_star << " Y0(f)=" << full.solution.y0;
    report.detail = detail.str();
    return report.finish();
}

CheckReport check_scheme_oracles(const PipelineConfig& cfg, const PathBatch& batch, double c0) {
    CheckReport report{.name = "scheme_oracles"};
    const JumpGrid grid = make_grid(cfg);
    const SolverConfig solver{cfg.partition, std::nullopt};
    const Eigen::ArrayXd terminal = evaluate_payoff(batch, cfg.payoff);
    const double mean_f = pairwise_mean(terminal);
    const double horizon = std::accumulate(batch.dt.begin(), batch.dt.end(), 0.0);
    const double y_zero = solve(batch, terminal, grid, constant_driver(0.0), solver).y0;
    const double y_const = solve(batch, terminal, grid, constant_driver(c0), solver).y0;
    report.record(1e-12 - std::abs(y_zero - mean_f), 0.0);
    report.record(1e-12 - std::abs(y_const - (mean_f + c0 * horizon)), 0.0);
    report.detail = fmt("zero_err", y_zero - mean_f) + ' ' + fmt("const_err", y_const - mean_f - c0 * horizon);
    return report.finish();
}

CheckReport check_solution_bound(const PipelineConfig& cfg, const BackwardSolution& sol, double eps_reg) {
    CheckReport report{.name = "solution_bound"};
    const JumpGrid grid = make_grid(cfg);
    const DriverContext ctx = make_context(cfg, grid);
    const double lambda = cfg.utility.lambda;
    const double c = ctx.c_const();
    const double slack = c * c / (2.0 * lambda) + (cfg.utility.pi_lower + cfg.utility.pi_upper) * ctx.abs_eta_mass();
    const double bound = std::log(std::exp(lambda * cfg.payoff.sup_norm()) + 1.0) / lambda + cfg.market.T * slack;
    report.record(bound + eps_reg - sol.max_abs_y(), 0.0);
    report.detail = fmt("max|Y|", sol.max_abs_y()) + ' ' + fmt("bound", bound);
    return report.finish();
}

std::vector<CheckReport> run_verify_suite(const PipelineConfig& cfg, const VerifyOptions& options) {
    std::vector<CheckReport> reports;
    const JumpGrid grid = make_grid(cfg);
    const DriverContext ctx = make_context(cfg, grid);
    const std::size_t n = options.n_samples;
    const std::uint64_t s = options.sample_seed;

    reports.push_back(check_driver_sandwich(n, ctx, s));
    CheckReport mutated = check_driver_sandwich(n, ctx, s, [&ctx](double z, const GridFunction& u, int m) {
        return -penalized_driver_fm(z, u, PenalizationIndex(m), ctx);
    });
    mutated.name = "driver_sandwich_self_test";
    mutated.detail = "sign-flipped driver must violate: " + std::to_string(mutated.violations) + " violations";
    mutated.pass = mutated.violations > 0;
    reports.push_back(mutated);
    reports.push_back(check_fm_monotone(n, ctx, s + 1));
    reports.push_back(check_lipschitz_z(n, ctx, s + 2));
    reports.push_back(check_scenario_limits(n, cfg.market, grid, cfg.utility, cfg.driver, s + 3));

    const EpsReg eps = calibrate_eps_reg(cfg, options.seeds);
    CheckReport calib{.name = "eps_reg_calibration"};
    calib.record(0.0, 0.0);
    calib.detail = fmt("eps_reg", eps.value) + ' ' + fmt("zero_err", eps.zero_driver_error) + ' ' +
                   fmt("spread", eps.seed_spread);
    reports.push_back(calib.finish());

    const PathBatch batch = make_batch(cfg, grid, options.seeds.front());
    const SolverConfig solver{cfg.partition, std::nullopt};
    const Eigen::ArrayXd terminal = evaluate_payoff(batch, cfg.payoff);
    const DriverFn f = make_driver(ctx);
    const double delta = 0.05;
    reports.push_back(check_comparison(batch, grid, terminal, terminal, f,
                                       [f, delta](double z, const GridFunction& u) { return f(z, u) + delta; },
                                       solver, eps.value, delta * cfg.market.T, "comparison_driver_shift"));
    if (cfg.payoff.kind == Payoff::Kind::put) {
        Payoff lower = cfg.payoff;
        lower.strike = 0.9 * cfg.payoff.strike;
        reports.push_back(check_comparison(batch, grid, evaluate_payoff(batch, lower), terminal, f, f, solver,
                                           eps.value, std::nullopt, "comparison_strike"));
    }
    reports.push_back(check_penalization_convergence(cfg, batch, eps.value));
    reports.push_back(check_scheme_oracles(cfg, batch));
    reports.push_back(check_solution_bound(cfg, run_on_batch(cfg, grid, batch).solution, eps.value));
    OptimalityOptions opt;
    opt.train_seed = options.seeds.front();
    opt.test_seed = options.seeds.front() + 1'000'003;
    reports.push_back(check_martingale_optimality(cfg, eps.value, opt));
    std::stable_sort(reports.begin(), reports.end(),
                     [](const CheckReport& a, const CheckReport& b) { return a.name < b.name; });
    return reports;
}

void write_reports_text(std::ostream& out, const std::vector<CheckReport>& reports) {
    for (const auto& r : reports) {
        out << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " samples=" << r.samples << " violations=" << r.violations
            << " worst_margin=" << r.worst_margin << " tol=" << r.tolerance;
        if (!r.detail.empty()) out << " | " << r.detail;
        out << '\n';
    }
}

void write_reports_csv(std::ostream& out, const std::vector<CheckReport>& reports) {
    out << "name,samples,violations,worst_margin,tolerance,pass\n";
    out.precision(12);
    for (const auto& r : reports) {
        out << r.name << ',' << r.samples << ',' << r.violations << ',' << r.worst_margin << ',' << r.tolerance << ','
            << (r.pass ? 1 : 0) << '\n';
    }
}

}  // namespace sigbsde
