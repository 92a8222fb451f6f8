#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "sigbsde/errors.hpp"
#include "sigbsde/numerics.hpp"
#include "sigbsde/simulate.hpp"

using namespace sigbsde;

namespace {

const LevyMarketSpec kMarket{};

PathBatch market_batch(std::size_t paths, std::uint64_t seed, std::size_t steps = 10) {
    const JumpGrid grid = build_grid(20, GridLayout{}, kMarket);
    return simulate_batch(kMarket, grid, TimeGrid::uniform(steps, 1.0), paths, seed);
}

}  // namespace

TEST_CASE("deterministic markets") {
    LevyMarketSpec spec;
    spec.rho = 0.0;
    spec.sigma = 0.0;
    const JumpGrid grid = build_grid(4, GridLayout{}, spec);
    const PathBatch flat = simulate_batch(spec, grid, TimeGrid::uniform(5, 1.0), 10, 1);
    CHECK((flat.S.array() == 1.0).all());

    spec.kappa = 0.1;
    const PathBatch growth = simulate_batch(spec, grid, TimeGrid::uniform(5, 1.0), 10, 1);
    CHECK((growth.S.col(5).array() - std::exp(0.1)).abs().maxCoeff() < 1e-14);
}

TEST_CASE("time grid") {
    const TimeGrid g = TimeGrid::uniform(10, 1.0);
    CHECK(g.steps() == 10);
    CHECK(g.dt(3) == doctest::Approx(0.1));
    CHECK(g.horizon() == 1.0);
    CHECK_THROWS_AS((void)TimeGrid::uniform(0, 1.0), ConfigError);
    TimeGrid bad{{0.0, 0.5, 0.4}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("compensated increments and the discounted price are centred") {
    const JumpGrid grid = build_grid(20, GridLayout{}, kMarket);
    const PathBatch b = market_batch(100000, 11);
    const auto n = static_cast<double>(b.n_paths());
    for (std::size_t bin : {0ul, 19ul, 20ul, 39ul}) {
        const double nu = grid.weights()(static_cast<Eigen::Index>(bin));
        const Eigen::ArrayXd c = b.compensated(4, bin, nu);
        const double se = std::sqrt(nu * b.dt[4] / n);
        CHECK(std::abs(pairwise_mean(c)) < 5.0 * se);
    }
    const Eigen::ArrayXd st = b.S.col(10).array();
    const double mean = pairwise_mean(st);
    const double se = std::sqrt((st - mean).square().sum() / (n - 1.0) / n);
    CHECK(std::abs(mean - 1.0) < 5.0 * se);
    CHECK(std::abs(pairwise_mean(b.dW.col(0).array())) < 5.0 * std::sqrt(0.1 / n));
}

TEST_CASE("simulation is reproducible and independent of the worker count") {
    const PathBatch a = market_batch(3000, 5);
    setenv("SIGBSDE_THREADS", "4", 1);
    const PathBatch b = market_batch(3000, 5);
    unsetenv("SIGBSDE_THREADS");
    CHECK(a.S == b.S);
    CHECK(a.dW == b.dW);
    for (std::size_t k = 0; k < a.n_steps(); ++k) CHECK(a.jumps[k] == b.jumps[k]);
    const PathBatch c = market_batch(3000, 6);
    CHECK(a.S != c.S);
    // Paths are keyed individually: a prefix of a larger batch is the smaller batch.
    const PathBatch d = market_batch(4000, 5);
    CHECK(d.S.topRows(3000) == a.S);
}

TEST_CASE("batch csv round trip and parse errors") {
    const JumpGrid grid = build_grid(2, GridLayout{}, kMarket);
    const PathBatch b = simulate_batch(kMarket, grid, TimeGrid::uniform(3, 1.0), 4, 9);
    std::stringstream io;
    write_batch_csv(io, b, grid);
    const PathBatch r = read_batch_csv(io);
    CHECK(r.seed == 9);
    CHECK(r.S == b.S);
    CHECK(r.dW == b.dW);
    CHECK(r.dt == b.dt);
    for (std::size_t k = 0; k < 3; ++k) CHECK(r.jumps[k] == b.jumps[k]);

    std::string text = io.str();
    std::stringstream broken(text.substr(0, text.find('\n', text.find("0,1,")) + 1) + "0,2,abc,0,0,0,0,1\n");
    try {
        (void)read_batch_csv(broken);
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
    std::stringstream empty("");
    CHECK_THROWS_AS((void)read_batch_csv(empty), ConfigError);
}

TEST_CASE("payoffs") {
    CHECK(payoff_put(1.0, 1.0) == 0.0);
    CHECK(payoff_put(0.4, 1.0) == doctest::Approx(0.6));
    CHECK(payoff_put(1.7, 1.0) == 0.0);
    CHECK_THROWS_AS((void)payoff_put(1.0, 0.0), DomainError);
    Payoff call{Payoff::Kind::call, 1.0, {}};
    CHECK(call(1.5) == doctest::Approx(0.5));
    Payoff digital{Payoff::Kind::digital, 1.0, {}};
    CHECK(digital(0.9) == 1.0);
    CHECK(digital.sup_norm() == 1.0);
    Payoff table{Payoff::Kind::table, 1.0, {{0.5, 0.2}, {1.5, 0.6}}};
    CHECK(table(1.0) == doctest::Approx(0.4));
    CHECK(table(0.1) == 0.2);
    CHECK(table(9.0) == 0.6);
    CHECK(table.sup_norm() == 0.6);
    Payoff bad_table{Payoff::Kind::table, 1.0, {{1.0, 0.0}}};
    CHECK_THROWS_AS(bad_table.validate(), ConfigError);
    CHECK(parse_payoff_kind("put") == Payoff::Kind::put);
    CHECK_THROWS_AS((void)parse_payoff_kind("asian"), ConfigError);
}

TEST_CASE("wealth and utility") {
    const JumpGrid grid = build_grid(20, GridLayout{}, kMarket);
    const PathBatch b = market_batch(500, 3);
    const SignalScenario sc = SignalScenario::hide_small(0.3);
    const Eigen::ArrayXd x = wealth_forward(b, kMarket, grid, sc, StrategyTable::constant(1.0, 1.0, 0.0), 0.7);
    CHECK((x == 0.7).all());

    const UtilityEstimate flat = mc_expected_utility(x, Eigen::ArrayXd::Zero(500), 0.4);
    CHECK(flat.mean == doctest::Approx(-std::exp(-0.28)).epsilon(1e-14));
    CHECK(flat.std_error == 0.0);
    const UtilityEstimate shifted =
        mc_expected_utility(Eigen::ArrayXd::Zero(10), Eigen::ArrayXd::Constant(10, 0.25), 0.4);
    CHECK(shifted.mean == doctest::Approx(-1.1051709180756476).epsilon(1e-15));

    // Holding one unit: the gain is a sum of martingale increments.
    const Eigen::ArrayXd one = wealth_forward(b, kMarket, grid, SignalScenario::no_signal(),
                                              StrategyTable::constant(1.0, 1.0, 1.0), 0.0);
    CHECK(std::abs(pairwise_mean(one)) < 0.05);

    const StrategyTable rogue(1.0, 1.0, [](std::size_t, double, double) { return 2.0; });
    CHECK_THROWS_AS((void)wealth_forward(b, kMarket, grid, sc, rogue, 0.0), DomainError);
    CHECK_THROWS_AS((void)mc_expected_utility(Eigen::ArrayXd::Zero(3), Eigen::ArrayXd::Zero(4), 0.4), DomainError);
}

TEST_CASE("strategy from a signal map") {
    const StrategyTable t = StrategyTable::from_map(1.0, 1.0, 0.25, {{0.99, 1.0}, {-0.99, -1.0}});
    CHECK(t.position(0, 1.0, 0.0) == 0.25);
    CHECK(t.position(0, 1.0, 0.99) == 1.0);
    CHECK(t.position(0, 1.0, -0.99) == -1.0);
    CHECK_THROWS_AS((void)t.position(0, 1.0, 0.5), DomainError);
}
