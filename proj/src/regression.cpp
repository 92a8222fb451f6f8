#include "sigbsde/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sigbsde/errors.hpp"
#include "sigbsde/numerics.hpp"

namespace sigbsde {

void PartitionConfig::validate() const {
    if (cells < 1) throw ConfigError("scheme.cells must be >= 1");
    if (min_cell_paths < 1) throw ConfigError("scheme.min_cell_paths must be >= 1");
}

BasisPartition BasisPartition::build(const Eigen::ArrayXd& regressor, const PartitionConfig& config) {
    config.validate();
    const auto n = static_cast<std::size_t>(regressor.size());
    if (n == 0) throw DomainError("BasisPartition: empty sample");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return regressor(static_cast<Eigen::Index>(a)) < regressor(static_cast<Eigen::Index>(b));
    });
    auto sorted_value = [&](std::size_t rank) { return regressor(static_cast<Eigen::Index>(order[rank])); };

    // Quantile edges, deduplicated so ties never straddle an edge.
    std::vector<double> edges;
    const auto cells = static_cast<std::size_t>(config.cells);
    for (std::size_t j = 1; j < cells; ++j) {
        const std::size_t rank = j * n / cells;
        if (rank == 0 || rank >= n) continue;
        const double edge = sorted_value(rank);
        if (edge > sorted_value(0) && (edges.empty() || edge > edges.back())) edges.push_back(edge);
    }

    auto counts_for = [&](const std::vector<double>& e) {
        std::vector<std::size_t> counts(e.size() + 1, 0);
        for (std::size_t r = 0; r < n; ++r) {
            const double v = sorted_value(r);
            ++counts[static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), v) - e.begin())];
        }
        return counts;
    };

    // Merge the smallest undersized cell into its smaller neighbour until all pass.
    const auto min_count = static_cast<std::size_t>(config.min_cell_paths);
    for (;;) {
        const auto counts = counts_for(edges);
        if (counts.size() == 1) break;
        std::size_t worst = counts.size();
        for (std::size_t j = 0; j < counts.size(); ++j) {
            if (counts[j] < min_count && (worst == counts.size() || counts[j] < counts[worst])) worst = j;
        }
        if (worst == counts.size()) break;
        std::size_t drop;
        if (worst == 0) {
            drop = 0;
        } else if (worst + 1 == counts.size()) {
            drop = worst - 1;
        } else {
            drop = counts[worst - 1] <= counts[worst + 1] ? worst - 1 : worst;
        }
        edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(drop));
    }

    BasisPartition part;
    part.design_ = config.design;
    part.edges_ = std::move(edges);
    part.members_.assign(part.edges_.size() + 1, {});
    part.cell_ids_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = part.cell_of(regressor(static_cast<Eigen::Index>(i)));
        part.cell_ids_[i] = c;
        part.members_[c].push_back(i);
    }
    return part;
}

std::size_t BasisPartition::cell_of(double s) const {
    return static_cast<std::size_t>(std::upper_bound(edges_.begin(), edges_.end(), s) - edges_.begin());
}

std::size_t CellFit::singular_count() const {
    return static_cast<std::size_t>(std::count(singular.begin(), singular.end(), true));
}

CellFit fit_cells(const Eigen::ArrayXd& targets, const Eigen::ArrayXd& regressor, const BasisPartition& partition) {
    if (targets.size() != regressor.size() || static_cast<std::size_t>(targets.size()) != partition.cell_ids().size())
        throw DomainError("fit_conditional_expectation: arrays and partition are not aligned");
    const std::size_t cells = partition.cell_count();
    const auto nc = static_cast<Eigen::Index>(cells);
    CellFit fit{Eigen::ArrayXd::Zero(nc), Eigen::ArrayXd::Zero(nc), Eigen::ArrayXd::Zero(nc),
                std::vector<bool>(cells, false)};

    for (std::size_t c = 0; c < cells; ++c) {
        const auto& idx = partition.members()[c];
        const auto m = static_cast<Eigen::Index>(idx.size());
        const auto ci = static_cast<Eigen::Index>(c);
        if (m == 0) continue;
        Eigen::ArrayXd y(m);
        Eigen::ArrayXd s(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            const auto p = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]);
            y(j) = targets(p);
            s(j) = regressor(p);
        }
        const double y_mean = pairwise_mean(y);
        fit.intercept(ci) = y_mean;
        if (partition.design() == Design::constant) continue;

        const double s_mean = pairwise_mean(s);
        fit.center(ci) = s_mean;
        const Eigen::ArrayXd ds = s - s_mean;
        const double sxx = pairwise_sum((ds * ds).eval());
        const double scale = std::max(pairwise_sum((s * s).eval()), 1e-300);
        if (m < 2 || sxx <= 1e-14 * scale) {
            fit.singular[c] = true;
            continue;
        }
        fit.slope(ci) = pairwise_sum((ds * (y - y_mean)).eval()) / sxx;
    }
    return fit;
}

FitResult fit_conditional_expectation(const Eigen::ArrayXd& targets, const Eigen::ArrayXd& regressor,
                                      const BasisPartition& partition) {
    FitResult out{fit_cells(targets, regressor, partition), Eigen::ArrayXd(targets.size())};
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
        out.fitted(i) = out.fit.predict(partition.cell_ids()[static_cast<std::size_t>(i)], regressor(i));
    }
    return out;
}

}  // namespace sigbsde
