#include <doctest.h>

#include <cmath>
#include <map>

#include "sigbsde/errors.hpp"
#include "sigbsde/regression.hpp"
#include "sigbsde/simulate.hpp"

using namespace sigbsde;

namespace {

Eigen::ArrayXd lognormal_sample(std::size_t n) {
    const LevyMarketSpec spec;
    const JumpGrid grid = build_grid(20, GridLayout{}, spec);
    return simulate_batch(spec, grid, TimeGrid::uniform(1, 1.0), n, 17).S.col(1).array();
}

}  // namespace

TEST_CASE("equiprobable partition") {
    const Eigen::ArrayXd s = lognormal_sample(65536);
    const BasisPartition part = BasisPartition::build(s, PartitionConfig{});
    CHECK(part.cell_count() == 64);
    std::size_t total = 0;
    for (const auto& m : part.members()) {
        CHECK(m.size() >= 50);
        CHECK(m.size() == 1024);
        total += m.size();
    }
    CHECK(total == 65536);
    for (Eigen::Index p = 0; p < s.size(); p += 97) CHECK(part.cell_of(s(p)) == part.cell_ids()[static_cast<std::size_t>(p)]);
}

TEST_CASE("ties stay together and small samples merge cells") {
    Eigen::ArrayXd s = Eigen::ArrayXd::Constant(500, 1.0);
    BasisPartition flat = BasisPartition::build(s, PartitionConfig{});
    CHECK(flat.cell_count() == 1);

    PartitionConfig cfg;
    cfg.cells = 64;
    cfg.min_cell_paths = 50;
    const Eigen::ArrayXd few = Eigen::ArrayXd::LinSpaced(400, 0.0, 1.0);
    const BasisPartition merged = BasisPartition::build(few, cfg);
    CHECK(merged.cell_count() <= 8);
    for (const auto& m : merged.members()) CHECK(m.size() >= 50);

    Eigen::ArrayXd half(2000);
    half.head(1000).setConstant(0.5);
    half.tail(1000) = Eigen::ArrayXd::LinSpaced(1000, 1.0, 2.0);
    const BasisPartition tied = BasisPartition::build(half, PartitionConfig{});
    const std::size_t c = tied.cell_ids()[0];
    for (Eigen::Index i = 0; i < 1000; ++i) CHECK(tied.cell_ids()[static_cast<std::size_t>(i)] == c);

    cfg.cells = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("projection of constants and affine targets") {
    const Eigen::ArrayXd s = lognormal_sample(20000);
    const BasisPartition cpart = BasisPartition::build(s, PartitionConfig{});
    const FitResult c = fit_conditional_expectation(Eigen::ArrayXd::Constant(s.size(), 0.37), s, cpart);
    CHECK((c.fitted - 0.37).abs().maxCoeff() < 1e-15);

    PartitionConfig lin;
    lin.design = Design::linear;
    const BasisPartition lpart = BasisPartition::build(s, lin);
    const Eigen::ArrayXd target = 2.5 * s - 0.75;
    const FitResult a = fit_conditional_expectation(target, s, lpart);
    CHECK(((a.fitted - target).abs() / target.abs().max(1.0)).maxCoeff() < 1e-10);
    CHECK(a.fit.singular_count() == 0);
}

TEST_CASE("cell means of S squared match a groupwise oracle") {
    const Eigen::ArrayXd s = lognormal_sample(65536);
    const BasisPartition part = BasisPartition::build(s, PartitionConfig{});
    const Eigen::ArrayXd target = s.square();
    const FitResult r = fit_conditional_expectation(target, s, part);
    std::map<std::size_t, std::pair<double, double>> groups;
    for (Eigen::Index p = 0; p < s.size(); ++p) {
        auto& g = groups[part.cell_ids()[static_cast<std::size_t>(p)]];
        g.first += target(p);
        g.second += 1.0;
    }
    for (Eigen::Index p = 0; p < s.size(); p += 13) {
        const auto& g = groups[part.cell_ids()[static_cast<std::size_t>(p)]];
        CHECK(r.fitted(p) == doctest::Approx(g.first / g.second).epsilon(1e-12));
    }
}

TEST_CASE("linear design falls back on degenerate cells") {
    Eigen::ArrayXd s(200);
    s.head(100).setConstant(1.0);
    s.tail(100) = Eigen::ArrayXd::LinSpaced(100, 2.0, 3.0);
    PartitionConfig lin;
    lin.design = Design::linear;
    lin.cells = 2;
    const BasisPartition part = BasisPartition::build(s, lin);
    const Eigen::ArrayXd t = Eigen::ArrayXd::LinSpaced(200, 0.0, 1.0);
    const FitResult r = fit_conditional_expectation(t, s, part);
    CHECK(r.fit.singular_count() == 1);
    CHECK(r.fitted(0) == doctest::Approx(t.head(100).mean()));
}
