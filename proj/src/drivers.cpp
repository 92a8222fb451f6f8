#include "sigbsde/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sigbsde {

double rho_m(double x, int m) {
    const double md = m;
    if (x >= -md && x <= md) return 1.0;
    if (x > -(md + 1.0) && x < -md) return x + md + 1.0;
    if (x > md && x <= md + 1.0) return md + 1.0 - x;
    return 0.0;
}

double phi_m(double x, int m) {
    const double md = m;
    if (x <= md) return x;
    return std::atan(x - md) + md;
}

PenalizationIndex::PenalizationIndex(int value) : m(value) {
    if (value < 1) throw DomainError("penalization index m must be >= 1");
}

void UtilityParams::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("utility.lambda must be finite and > 0");
    if (!(pi_lower >= 0.0) || !(pi_upper >= 0.0) || !std::isfinite(pi_lower) || !std::isfinite(pi_upper))
        throw ConfigError("utility position bounds must be finite and >= 0");
    if (!std::isfinite(x0)) throw ConfigError("utility.x must be finite");
}

DriverContext::DriverContext(const LevyMarketSpec& spec, JumpGrid grid, SignalScenario scenario,
                             UtilityParams utility, DriverOptions options)
    : spec_(spec), grid_(std::move(grid)), scenario_(scenario), utility_(utility), options_(options) {
    spec_.validate();
    scenario_.validate();
    utility_.validate();
    c_const_ = spec_.sigma == 0.0 && spec_.kappa == integral_eta_nu(spec_) ? 0.0 : c_kappa_eta(spec_, utility_.lambda);
    signal_values_ = discrete_signal(grid_, scenario_);
    for (std::size_t p = 0; p < grid_.size(); ++p) {
        (signal_values_(static_cast<Eigen::Index>(p)) != 0.0 ? signal_bins_ : no_signal_bins_).push_back(p);
    }
    abs_eta_mass_ = (grid_.eta_values().abs() * grid_.weights()).sum();
}

ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double a, double b, double tol,
                                      int max_iter) {
    if (a == b) return {a, f(a), 0};
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    int it = 0;
    while (b - a > tol) {
        if (it >= max_iter) {
            std::ostringstream msg;
            msg << "golden_section_minimize: no convergence after " << max_iter << " iterations, bracket [" << a
                << ", " << b << "]";
            throw NumericError(msg.str());
        }
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
        ++it;
    }
    const double x = 0.5 * (a + b);
    return {x, f(x), it};
}

double u_lambda_norm(const GridFunction& u, const DriverContext& ctx) {
    const Eigen::ArrayXd& nu = ctx.grid().weights();
    double s = 0.0;
    for (Eigen::Index i = 0; i < nu.size(); ++i) s += h_lambda(u(i), ctx.lambda()) * nu(i);
    return s;
}

namespace {

// No-signal objective, optionally penalized. Written once so that f and f_m
// share every floating-point operation when the truncations are inactive.
double no_signal_objective(double z, const GridFunction& u, double p, const DriverContext& ctx,
                           const std::optional<PenalizationIndex>& m) {
    const double lambda = ctx.lambda();
    const double d = ctx.position_scale() * p - (z + ctx.c_const() / lambda);
    const double quad = 0.5 * lambda * d * d * (m ? rho_m(z, m->m) : 1.0);
    const Eigen::ArrayXd& nu = ctx.grid().weights();
    const Eigen::ArrayXd& marks = ctx.grid().marks();
    const Eigen::ArrayXd& eta = ctx.grid().eta_values();
    const double cutoff = m ? 1.0 / m->m : 0.0;
    double jumps = 0.0;
    double linear = 0.0;
    for (const std::size_t pos : ctx.no_signal_bins()) {
        const auto i = static_cast<Eigen::Index>(pos);
        linear += eta(i) * nu(i);
        if (m && std::abs(marks(i)) <= cutoff) continue;
        const double x = u(i) - p * eta(i);
        jumps += h_lambda(m ? phi_m(x, m->m) : x, lambda) * nu(i);
    }
    return quad + jumps - p * linear;
}

double signal_branch(const GridFunction& u, const DriverContext& ctx, const std::optional<PenalizationIndex>& m) {
    const double lambda = ctx.lambda();
    const Eigen::ArrayXd& nu = ctx.grid().weights();
    const Eigen::ArrayXd& marks = ctx.grid().marks();
    const Eigen::ArrayXd& eta = ctx.grid().eta_values();
    const double cutoff = m ? 1.0 / m->m : 0.0;
    double total = 0.0;
    for (const std::size_t pos : ctx.signal_bins()) {
        const auto i = static_cast<Eigen::Index>(pos);
        const double p = ctx.signal_position(ctx.signal_values()(i));
        double h = 0.0;
        if (!(m && std::abs(marks(i)) <= cutoff)) {
            const double x = u(i) - p * eta(i);
            h = h_lambda(m ? phi_m(x, m->m) : x, lambda) * (m ? rho_m(u(i), m->m) : 1.0);
        }
        total += (h - p * eta(i)) * nu(i);
    }
    return total;
}

ScalarMinimum minimize_no_signal(double z, const GridFunction& u, const DriverContext& ctx,
                                 const std::optional<PenalizationIndex>& m) {
    if (u.size() != static_cast<Eigen::Index>(ctx.grid().size()))
        throw DomainError("driver: u does not match the jump grid size");
    return golden_section_minimize([&](double p) { return no_signal_objective(z, u, p, ctx, m); }, -ctx.pi_lower(),
                                   ctx.pi_upper(), ctx.options().minimizer_tol, ctx.options().minimizer_max_iter);
}

}  // namespace

double f1_discrete(double z, const GridFunction& u, double p, const DriverContext& ctx) {
    if (!std::isfinite(p)) throw DomainError("f1_discrete: p must be finite");
    return no_signal_objective(z, u, p, ctx, std::nullopt);
}

DriverValue evaluate_driver(double z, const GridFunction& u, const DriverContext& ctx,
                            std::optional<PenalizationIndex> m) {
    const ScalarMinimum inner = minimize_no_signal(z, u, ctx, m);
    const double c = ctx.c_const();
    const double lambda = ctx.lambda();
    const double value = inner.value + signal_branch(u, ctx, m) - lambda * c * z - c * c / (2.0 * lambda);
    if (!std::isfinite(value)) throw NumericError("driver: non-finite value");
    return {value, inner.x};
}

DriverValue driver_f(double z, const GridFunction& u, const DriverContext& ctx) {
    return evaluate_driver(z, u, ctx, std::nullopt);
}

double penalized_driver_fm(double z, const GridFunction& u, PenalizationIndex m, const DriverContext& ctx) {
    return evaluate_driver(z, u, ctx, m).value;
}

double p_star(double g, double z, const GridFunction& u, const DriverContext& ctx) {
    if (g == 0.0) return minimize_no_signal(z, u, ctx, std::nullopt).x;
    if (!in_signal_range(ctx.spec(), ctx.scenario(), g))
        throw DomainError("p_star: g is not a signal value of the scenario");
    return ctx.signal_position(g);
}

DriverBounds driver_bounds(double z, const GridFunction& u, const DriverContext& ctx) {
    const double c = ctx.c_const();
    const double lambda = ctx.lambda();
    return {-z * c - c * c / (2.0 * lambda) - (ctx.pi_lower() + ctx.pi_upper()) * ctx.abs_eta_mass(),
            0.5 * lambda * z * z + u_lambda_norm(u, ctx)};
}

double local_lipschitz_constant(const DriverContext& ctx) {
    const double lambda = ctx.lambda();
    return 0.5 * lambda * (2.0 * (ctx.pi_lower() + ctx.pi_upper()) + 1.0) + std::abs(ctx.c_const()) * (1.0 + lambda);
}

}  // namespace sigbsde
