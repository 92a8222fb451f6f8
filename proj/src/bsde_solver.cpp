#include "sigbsde/bsde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <string>

#include "sigbsde/errors.hpp"
#include "sigbsde/numerics.hpp"

namespace sigbsde {

DriverFn make_driver(const DriverContext& ctx, std::optional<PenalizationIndex> m) {
    auto shared = std::make_shared<const DriverContext>(ctx);
    return [shared, m](double z, const GridFunction& u) { return evaluate_driver(z, u, *shared, m).value; };
}

DriverFn constant_driver(double value) {
    return [value](double, const GridFunction&) { return value; };
}

namespace {

void scale_fit(CellFit& fit, double factor) {
    fit.intercept *= factor;
    fit.slope *= factor;
}

GridFunction u_for_cell(const std::vector<CellFit>& u_fit, std::size_t cell, double s) {
    GridFunction u(static_cast<Eigen::Index>(u_fit.size()));
    for (std::size_t i = 0; i < u_fit.size(); ++i) u(static_cast<Eigen::Index>(i)) = u_fit[i].predict(cell, s);
    return u;
}

}  // namespace

StepResult backward_step(const Eigen::ArrayXd& y_next, const PathBatch& batch, std::size_t k, const JumpGrid& grid,
                         const PartitionConfig& partition, const DriverFn& driver) {
    const double dt = batch.dt.at(k);
    if (!(dt > 0.0)) throw DomainError("backward_step: dt must be > 0");
    if (batch.n_bins() != grid.size()) throw DomainError("backward_step: batch and grid disagree on bin count");
    const auto col = static_cast<Eigen::Index>(k);
    const Eigen::ArrayXd regressor = batch.S.col(col).array();

    StepResult out;
    StepSurface& surf = out.surface;
    surf.partition = BasisPartition::build(regressor, partition);
    surf.y_fit = fit_cells(y_next, regressor, surf.partition);
    surf.z_fit = fit_cells((y_next * batch.dW.col(col).array()).eval(), regressor, surf.partition);
    scale_fit(surf.z_fit, 1.0 / dt);
    surf.u_fit.reserve(grid.size());
    for (std::size_t b = 0; b < grid.size(); ++b) {
        const double nu = grid.weights()(static_cast<Eigen::Index>(b));
        CellFit fit = fit_cells((y_next * batch.compensated(k, b, nu)).eval(), regressor, surf.partition);
        // A bin without mass carries no jump risk; U is irrelevant there.
        scale_fit(fit, nu > 0.0 ? 1.0 / (nu * dt) : 0.0);
        surf.u_fit.push_back(std::move(fit));
    }

    const std::size_t n = batch.n_paths();
    out.y.resize(static_cast<Eigen::Index>(n));
    const auto& ids = surf.partition.cell_ids();
    if (surf.partition.design() == Design::constant) {
        const std::size_t cells = surf.partition.cell_count();
        surf.cell_driver.resize(static_cast<Eigen::Index>(cells));
        for (std::size_t c = 0; c < cells; ++c) {
            const auto ci = static_cast<Eigen::Index>(c);
            surf.cell_driver(ci) = driver(surf.z_fit.intercept(ci), u_for_cell(surf.u_fit, c, 0.0));
        }
        for (std::size_t p = 0; p < n; ++p) {
            const auto ci = static_cast<Eigen::Index>(ids[p]);
            out.y(static_cast<Eigen::Index>(p)) = surf.y_fit.intercept(ci) + dt * surf.cell_driver(ci);
        }
    } else {
        parallel_for(n, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                const auto pi = static_cast<Eigen::Index>(p);
                const double s = regressor(pi);
                const std::size_t c = ids[p];
                out.y(pi) = surf.y_fit.predict(c, s) +
                            dt * driver(surf.z_fit.predict(c, s), u_for_cell(surf.u_fit, c, s));
            }
        });
    }
    return out;
}

double BackwardSolution::z_at(std::size_t k, double s) const {
    const StepSurface& st = steps.at(k);
    return st.z_fit.predict(st.partition.cell_of(s), s);
}

GridFunction BackwardSolution::u_at(std::size_t k, double s) const {
    const StepSurface& st = steps.at(k);
    return u_for_cell(st.u_fit, st.partition.cell_of(s), s);
}

double BackwardSolution::max_abs_z() const {
    double m = 0.0;
    for (const auto& st : steps) m = std::max(m, st.z_fit.intercept.abs().maxCoeff());
    return m;
}

double BackwardSolution::max_abs_u() const {
    double m = 0.0;
    for (const auto& st : steps) {
        for (const auto& f : st.u_fit) m = std::max(m, f.intercept.abs().maxCoeff());
    }
    return m;
}

BackwardSolution solve(const PathBatch& batch, const Eigen::ArrayXd& terminal, const JumpGrid& grid,
                       const DriverFn& driver, const SolverConfig& config) {
    const std::size_t n = batch.n_steps();
    if (static_cast<std::size_t>(terminal.size()) != batch.n_paths())
        throw DomainError("solve: terminal values do not match the batch");
    BackwardSolution sol;
    sol.y.resize(static_cast<Eigen::Index>(batch.n_paths()), static_cast<Eigen::Index>(n + 1));
    sol.y.col(static_cast<Eigen::Index>(n)) = terminal.matrix();
    sol.steps.resize(n);
    for (std::size_t k = n; k-- > 0;) {
        const Eigen::ArrayXd y_next = sol.y.col(static_cast<Eigen::Index>(k + 1)).array();
        StepResult step;
        try {
            step = backward_step(y_next, batch, k, grid, config.partition, driver);
        } catch (const DomainError& e) {
            throw DomainError("backward step k=" + std::to_string(k) + ": " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("backward step k=" + std::to_string(k) + ": " + e.what());
        }
        if (config.clip) step.y = step.y.max(config.clip->first).min(config.clip->second);
        sol.y.col(static_cast<Eigen::Index>(k)) = step.y.matrix();
        sol.singular_cells += step.surface.z_fit.singular_count();
        sol.steps[k] = std::move(step.surface);
    }
    sol.y0 = pairwise_mean(sol.y.col(0).array());
    return sol;
}

void write_solution_csv(std::ostream& out, const BackwardSolution& sol, const JumpGrid& grid) {
    out.precision(17);
    out << "k,cell,count,Y,Z";
    for (std::size_t p = 0; p < grid.size(); ++p) out << ",U(" << grid.signed_index(p) << ')';
    out << '\n';
    for (std::size_t k = 0; k < sol.steps.size(); ++k) {
        const StepSurface& st = sol.steps[k];
        for (std::size_t c = 0; c < st.partition.cell_count(); ++c) {
            const auto ci = static_cast<Eigen::Index>(c);
            double y_mean = 0.0;
            for (const std::size_t p : st.partition.members()[c]) y_mean += sol.y(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k));
            y_mean /= static_cast<double>(st.partition.members()[c].size());
            out << k << ',' << c << ',' << st.partition.members()[c].size() << ',' << y_mean << ','
                << st.z_fit.intercept(ci);
            for (const auto& f : st.u_fit) out << ',' << f.intercept(ci);
            out << '\n';
        }
    }
}

ValueAndStrategy value_and_strategy(const BackwardSolution& sol, double x0, const DriverContext& ctx) {
    const double value = -std::exp(-ctx.lambda() * (x0 - sol.y0));
    auto steps = std::make_shared<const std::vector<StepSurface>>(sol.steps);
    auto context = std::make_shared<const DriverContext>(ctx);

    // Constant design: the inner argmin is a per-cell constant, computed once.
    auto cache = std::make_shared<std::vector<std::vector<double>>>();
    const bool constant = !steps->empty() && steps->front().partition.design() == Design::constant;
    if (constant) {
        for (const StepSurface& st : *steps) {
            std::vector<double> row;
            for (std::size_t c = 0; c < st.partition.cell_count(); ++c) {
                row.push_back(p_star(0.0, st.z_fit.intercept(static_cast<Eigen::Index>(c)),
                                     u_for_cell(st.u_fit, c, 0.0), *context));
            }
            cache->push_back(std::move(row));
        }
    }
    StrategyTable strategy(ctx.pi_lower(), ctx.pi_upper(),
                           [steps, context, cache, constant](std::size_t k, double s, double g) {
                               if (g != 0.0) return p_star(g, 0.0, GridFunction(), *context);
                               const StepSurface& st = steps->at(k);
                               const std::size_t c = st.partition.cell_of(s);
                               if (constant) return (*cache)[k][c];
                               return p_star(0.0, st.z_fit.predict(c, s), u_for_cell(st.u_fit, c, s), *context);
                           });
    return {value, std::move(strategy)};
}

}  // namespace sigbsde
