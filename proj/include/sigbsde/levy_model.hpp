#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sigbsde {

/// Market with Levy measure nu(de) = rho |e|^{-alpha} de, capped relative jump
/// size eta, drift kappa and volatility sigma.
struct LevyMarketSpec {
    double rho = 0.1;
    double alpha = 1.5;
    double epsilon = 0.01;
    double kappa = 0.0;
    double sigma = 0.2;
    double s0 = 1.0;
    double T = 1.0;

    /// Throws ConfigError unless alpha in (1,2), epsilon in (0,1), rho >= 0,
    /// sigma >= 0, s0 > 0 and T > 0.
    void validate() const;

    [[nodiscard]] double jump_cap() const { return 1.0 - epsilon; }
};

[[nodiscard]] double nu_density(const LevyMarketSpec& spec, double e);

/// Relative jump size: identity on [-(1-eps), 1-eps], clamped outside.
template <typename Scalar>
[[nodiscard]] Scalar eta(Scalar e, Scalar epsilon) {
    const Scalar cap = Scalar(1) - epsilon;
    return e > cap ? cap : (e < -cap ? -cap : e);
}

[[nodiscard]] inline double eta(const LevyMarketSpec& spec, double e) { return eta(e, spec.epsilon); }

/// nu((a, b]) for 0 < a < b <= +inf, from the closed-form antiderivative.
[[nodiscard]] double nu_mass(const LevyMarketSpec& spec, double a, double b);

/// nu([a, +inf)) for a > 0.
[[nodiscard]] double nu_tail_mass(const LevyMarketSpec& spec, double a);

/// Signed integral of eta against nu. Zero: eta is odd and nu symmetric.
[[nodiscard]] double integral_eta_nu(const LevyMarketSpec& spec);

/// Integral of |eta| against nu, closed form.
[[nodiscard]] double integral_abs_eta_nu(const LevyMarketSpec& spec);

/// (kappa - int eta dnu) / (lambda sigma).
[[nodiscard]] double c_kappa_eta(const LevyMarketSpec& spec, double lambda);

// ---------------------------------------------------------------------------
// Signal scenarios

enum class SignalKind { none, hide_small, hide_large };

[[nodiscard]] std::string to_string(SignalKind kind);
[[nodiscard]] SignalKind parse_signal_kind(const std::string& name);

struct SignalScenario {
    SignalKind kind = SignalKind::none;
    double c = 0.0;

    static SignalScenario no_signal() { return {SignalKind::none, 0.0}; }
    /// Jumps with |e| < c are not revealed.
    static SignalScenario hide_small(double c) { return {SignalKind::hide_small, c}; }
    /// Jumps with |e| > c are not revealed.
    static SignalScenario hide_large(double c) { return {SignalKind::hide_large, c}; }

    void validate() const;
    [[nodiscard]] std::string name() const { return to_string(kind); }
};

/// Signal value revealed for a jump of mark e.
[[nodiscard]] double gamma(const LevyMarketSpec& spec, const SignalScenario& scenario, double e);

/// True when g lies in gamma(R) \ {0}.
[[nodiscard]] bool in_signal_range(const LevyMarketSpec& spec, const SignalScenario& scenario, double g);

/// Image measure mu = nu o gamma^{-1} on gamma != 0: two atoms of equal mass at
/// +-(1-eps) plus the nu-density on +-[density_lo, density_hi].
struct MuMeasure {
    double atom = 0.0;        ///< location 1-eps
    double atom_mass = 0.0;   ///< mass of each atom
    double density_lo = 0.0;  ///< 0 means the segment reaches the origin
    double density_hi = 0.0;  ///< density_lo >= density_hi means no segment

    [[nodiscard]] bool has_density() const { return density_hi > density_lo; }
    /// Total mass; +inf when the density segment reaches the origin.
    [[nodiscard]] double total_mass(const LevyMarketSpec& spec) const;
    /// Integral of |g| mu(dg).
    [[nodiscard]] double integral_abs(const LevyMarketSpec& spec) const;
};

[[nodiscard]] MuMeasure mu_measure(const SignalScenario& scenario, const LevyMarketSpec& spec);

/// Mean of eta under the kernel K(g, .).
[[nodiscard]] double eta_hat(double g, const SignalScenario& scenario, const LevyMarketSpec& spec);
/// Variance of eta under the kernel K(g, .).
[[nodiscard]] double v_eta(double g, const SignalScenario& scenario, const LevyMarketSpec& spec);

// ---------------------------------------------------------------------------
// Jump-space discretization

struct GridLayout {
    enum class Kind { geometric, uniform };
    Kind kind = Kind::geometric;
    double e_min = 0.05;
    double e_max = 5.0;
};

[[nodiscard]] std::string to_string(GridLayout::Kind kind);
[[nodiscard]] GridLayout::Kind parse_layout_kind(const std::string& name);

/// Symmetric marks e_{-q} < ... < e_{-1} < e_1 < ... < e_q with their bin
/// masses. Storage position p in [0, 2q) maps to signed index -q..-1, 1..q.
class JumpGrid {
public:
    JumpGrid() = default;
    /// Builds from strictly increasing positive marks e_1 < ... < e_q.
    JumpGrid(const LevyMarketSpec& spec, const std::vector<double>& positive_marks);

    [[nodiscard]] int q() const { return q_; }
    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(marks_.size()); }
    [[nodiscard]] const Eigen::ArrayXd& marks() const { return marks_; }
    [[nodiscard]] const Eigen::ArrayXd& weights() const { return weights_; }
    [[nodiscard]] const Eigen::ArrayXd& eta_values() const { return eta_; }
    [[nodiscard]] double total_intensity() const { return total_intensity_; }

    [[nodiscard]] int signed_index(std::size_t pos) const;
    [[nodiscard]] std::size_t position(int i) const;

    /// Largest l in [0, q] with e_l < c (e_0 = 0), so e_l < c <= e_{l+1}.
    [[nodiscard]] int split_index(double c) const;
    /// Midpoint between e_1 and the origin: lower edge of the innermost bin.
    [[nodiscard]] double inner_edge() const { return 0.5 * marks_(q_); }

private:
    int q_ = 0;
    Eigen::ArrayXd marks_;
    Eigen::ArrayXd weights_;
    Eigen::ArrayXd eta_;
    double total_intensity_ = 0.0;
};

[[nodiscard]] JumpGrid build_grid(int q, const GridLayout& layout, const LevyMarketSpec& spec);

/// Per-bin signal value gamma_i under the bracketing e_l < c <= e_{l+1}:
/// hide_small reveals |i| > l, hide_large reveals 1 <= |i| <= l.
[[nodiscard]] Eigen::ArrayXd discrete_signal(const JumpGrid& grid, const SignalScenario& scenario);

/// The bin whose midpoint interval contains c, for reporting.
[[nodiscard]] double snap_to_midpoint(const JumpGrid& grid, double c);

/// CSV columns: i,e_i,nu_i,gamma_i,branch
void write_grid_csv(std::ostream& out, const JumpGrid& grid, const SignalScenario& scenario);

}  // namespace sigbsde
