#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sigbsde/errors.hpp"
#include "sigbsde/levy_model.hpp"

namespace sigbsde {

/// Largest admissible exponent argument before a DomainError is raised.
inline constexpr double kMaxExponent = 700.0;

/// h_lambda(x) = (e^{lambda x} - lambda x - 1) / lambda, computed with expm1.
template <typename Scalar>
[[nodiscard]] Scalar h_lambda(Scalar x, Scalar lambda) {
    using std::expm1;
    const Scalar lx = lambda * x;
    if (lx > Scalar(kMaxExponent)) throw DomainError("h_lambda: exponent overflow (lambda x > 700)");
    return (expm1(lx) - lx) / lambda;
}

/// Cut-off rho_m: 1 on [-m, m], linear ramps to 0 on [-(m+1), -m] and [m, m+1].
[[nodiscard]] double rho_m(double x, int m);

/// phi_m(x) = x for x <= m and m + arctan(x - m) above.
[[nodiscard]] double phi_m(double x, int m);

/// Index m of the penalized driver f_m.
struct PenalizationIndex {
    int m = 1;
    explicit PenalizationIndex(int value);
};

/// Grid function u_i aligned with the JumpGrid storage positions.
using GridFunction = Eigen::ArrayXd;

struct UtilityParams {
    double lambda = 0.4;
    double pi_lower = 1.0;  ///< short-position bound, positions >= -pi_lower
    double pi_upper = 1.0;  ///< long-position bound, positions <= pi_upper
    double x0 = 0.0;        ///< initial wealth

    void validate() const;
};

struct DriverOptions {
    /// Quadratic term (lambda/2)(s p - (z + C/lambda))^2 with s = sigma when
    /// true and s = 1 when false.
    bool sigma_in_square = true;
    double minimizer_tol = 1e-10;
    int minimizer_max_iter = 200;
};

/// Immutable driver data for one market, grid and signal scenario.
class DriverContext {
public:
    DriverContext(const LevyMarketSpec& spec, JumpGrid grid, SignalScenario scenario, UtilityParams utility,
                  DriverOptions options = {});

    [[nodiscard]] double lambda() const { return utility_.lambda; }
    [[nodiscard]] double pi_lower() const { return utility_.pi_lower; }
    [[nodiscard]] double pi_upper() const { return utility_.pi_upper; }
    [[nodiscard]] double c_const() const { return c_const_; }
    [[nodiscard]] double sigma() const { return spec_.sigma; }
    /// Coefficient of p inside the quadratic term.
    [[nodiscard]] double position_scale() const { return options_.sigma_in_square ? spec_.sigma : 1.0; }
    [[nodiscard]] const LevyMarketSpec& spec() const { return spec_; }
    [[nodiscard]] const JumpGrid& grid() const { return grid_; }
    [[nodiscard]] const SignalScenario& scenario() const { return scenario_; }
    [[nodiscard]] const UtilityParams& utility() const { return utility_; }
    [[nodiscard]] const DriverOptions& options() const { return options_; }

    [[nodiscard]] const std::vector<std::size_t>& no_signal_bins() const { return no_signal_bins_; }
    [[nodiscard]] const std::vector<std::size_t>& signal_bins() const { return signal_bins_; }
    /// gamma(e_i) per storage position (zero on no-signal bins).
    [[nodiscard]] const Eigen::ArrayXd& signal_values() const { return signal_values_; }
    /// Boundary position used on each signal bin: pi_upper when gamma > 0, -pi_lower when gamma < 0.
    [[nodiscard]] double signal_position(double g) const { return g > 0.0 ? utility_.pi_upper : -utility_.pi_lower; }
    /// sum_i |eta(e_i)| nu_i over the whole grid.
    [[nodiscard]] double abs_eta_mass() const { return abs_eta_mass_; }

private:
    LevyMarketSpec spec_;
    JumpGrid grid_;
    SignalScenario scenario_;
    UtilityParams utility_;
    DriverOptions options_;
    double c_const_ = 0.0;
    double abs_eta_mass_ = 0.0;
    Eigen::ArrayXd signal_values_;
    std::vector<std::size_t> no_signal_bins_;
    std::vector<std::size_t> signal_bins_;
};

struct ScalarMinimum {
    double x = 0.0;
    double value = 0.0;
    int iterations = 0;
};

/// Golden-section search for a strictly convex function on [a, b]. Throws
/// NumericError when the bracket is not below `tol` after `max_iter` steps.
[[nodiscard]] ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double a, double b,
                                                    double tol, int max_iter);

/// |u|_lambda = sum_i h_lambda(u_i) nu_i.
[[nodiscard]] double u_lambda_norm(const GridFunction& u, const DriverContext& ctx);

/// No-signal objective f^1(z, u, p) on the grid.
[[nodiscard]] double f1_discrete(double z, const GridFunction& u, double p, const DriverContext& ctx);

struct DriverValue {
    double value = 0.0;
    double p_default = 0.0;  ///< argmin of the no-signal part, p*(0, z, u)
};

/// Discretized driver f(z, u): inner minimum over p plus signal-branch sum at
/// boundary positions plus the affine tail -lambda C z - C^2 / (2 lambda).
[[nodiscard]] DriverValue driver_f(double z, const GridFunction& u, const DriverContext& ctx);

/// Penalized driver f_m(z, u).
[[nodiscard]] double penalized_driver_fm(double z, const GridFunction& u, PenalizationIndex m,
                                         const DriverContext& ctx);

/// Shared evaluator behind driver_f and penalized_driver_fm. With every
/// truncation inactive both produce bit-identical results.
[[nodiscard]] DriverValue evaluate_driver(double z, const GridFunction& u, const DriverContext& ctx,
                                          std::optional<PenalizationIndex> m);

/// Optimal position for signal value g (g = 0 when no signal is received).
[[nodiscard]] double p_star(double g, double z, const GridFunction& u, const DriverContext& ctx);

struct DriverBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Quadratic-growth sandwich valid for every f_m.
[[nodiscard]] DriverBounds driver_bounds(double z, const GridFunction& u, const DriverContext& ctx);

/// Constant K with |f(z,u) - f(z',u)| <= K (1 + |z| + |z'|) |z - z'|.
[[nodiscard]] double local_lipschitz_constant(const DriverContext& ctx);

}  // namespace sigbsde
