#include "sigbsde/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "sigbsde/errors.hpp"

namespace sigbsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Antiderivative of rho e^{-alpha} on (0, inf), vanishing at +inf.
double tail_antiderivative(const LevyMarketSpec& spec, double a) {
    if (std::isinf(a)) return 0.0;
    return spec.rho * std::pow(a, 1.0 - spec.alpha) / (spec.alpha - 1.0);
}

// Integral of e * rho e^{-alpha} over (a, b], 0 <= a < b < inf.
double first_moment(const LevyMarketSpec& spec, double a, double b) {
    const double k = 2.0 - spec.alpha;
    return spec.rho * (std::pow(b, k) - std::pow(a, k)) / k;
}

}  // namespace

void LevyMarketSpec::validate() const {
    if (!(alpha > 1.0 && alpha < 2.0)) throw ConfigError("market.alpha must lie in (1, 2)");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("market.epsilon must lie in (0, 1)");
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("market.rho must be finite and >= 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("market.sigma must be finite and >= 0");
    if (!(s0 > 0.0)) throw ConfigError("market.s0 must be > 0");
    if (!(T > 0.0)) throw ConfigError("market.T must be > 0");
    if (!std::isfinite(kappa)) throw ConfigError("market.kappa must be finite");
}

double nu_density(const LevyMarketSpec& spec, double e) {
    if (e == 0.0) throw DomainError("nu_density: nu has no density at e = 0");
    return spec.rho * std::pow(std::abs(e), -spec.alpha);
}

double nu_mass(const LevyMarketSpec& spec, double a, double b) {
    if (!(a > 0.0) || !(b > a)) throw DomainError("nu_mass: need 0 < a < b");
    return tail_antiderivative(spec, a) - tail_antiderivative(spec, b);
}

double nu_tail_mass(const LevyMarketSpec& spec, double a) {
    if (!(a > 0.0)) throw DomainError("nu_tail_mass: need a > 0");
    return tail_antiderivative(spec, a);
}

double integral_eta_nu(const LevyMarketSpec&) { return 0.0; }

double integral_abs_eta_nu(const LevyMarketSpec& spec) {
    const double cap = spec.jump_cap();
    return 2.0 * (first_moment(spec, 0.0, cap) + cap * tail_antiderivative(spec, cap));
}

double c_kappa_eta(const LevyMarketSpec& spec, double lambda) {
    if (spec.sigma == 0.0) throw ConfigError("c_kappa_eta: sigma must be nonzero");
    if (lambda == 0.0) throw ConfigError("c_kappa_eta: lambda must be nonzero");
    return (spec.kappa - integral_eta_nu(spec)) / (lambda * spec.sigma);
}

// ---------------------------------------------------------------------------

std::string to_string(SignalKind kind) {
    switch (kind) {
        case SignalKind::none: return "no_signal";
        case SignalKind::hide_small: return "hide_small";
        case SignalKind::hide_large: return "hide_large";
    }
    return "unknown";
}

SignalKind parse_signal_kind(const std::string& name) {
    if (name == "no_signal" || name == "none") return SignalKind::none;
    if (name == "hide_small") return SignalKind::hide_small;
    if (name == "hide_large") return SignalKind::hide_large;
    throw ConfigError("unknown scenario variant '" + name + "'");
}

void SignalScenario::validate() const {
    if (kind != SignalKind::none && !(c > 0.0 && std::isfinite(c)))
        throw ConfigError("scenario cutoff c must be finite and > 0");
}

double gamma(const LevyMarketSpec& spec, const SignalScenario& scenario, double e) {
    switch (scenario.kind) {
        case SignalKind::none: return 0.0;
        case SignalKind::hide_small: return std::abs(e) >= scenario.c ? eta(spec, e) : 0.0;
        case SignalKind::hide_large: return std::abs(e) <= scenario.c ? eta(spec, e) : 0.0;
    }
    return 0.0;
}

bool in_signal_range(const LevyMarketSpec& spec, const SignalScenario& scenario, double g) {
    const double cap = spec.jump_cap();
    const double a = std::abs(g);
    switch (scenario.kind) {
        case SignalKind::none: return false;
        case SignalKind::hide_small: return a >= std::min(scenario.c, cap) && a <= cap;
        case SignalKind::hide_large: return a > 0.0 && a <= std::min(scenario.c, cap);
    }
    return false;
}

double MuMeasure::total_mass(const LevyMarketSpec& spec) const {
    double mass = 2.0 * atom_mass;
    if (has_density()) mass += density_lo == 0.0 ? kInf : 2.0 * nu_mass(spec, density_lo, density_hi);
    return mass;
}

double MuMeasure::integral_abs(const LevyMarketSpec& spec) const {
    double v = 2.0 * atom * atom_mass;
    if (has_density()) v += 2.0 * first_moment(spec, density_lo, density_hi);
    return v;
}

MuMeasure mu_measure(const SignalScenario& scenario, const LevyMarketSpec& spec) {
    scenario.validate();
    const double cap = spec.jump_cap();
    MuMeasure mu;
    mu.atom = cap;
    switch (scenario.kind) {
        case SignalKind::none:
            throw DomainError("mu_measure: the image measure is empty without a signal");
        case SignalKind::hide_small:
            mu.atom_mass = tail_antiderivative(spec, std::max(scenario.c, cap));
            if (scenario.c < cap) {
                mu.density_lo = scenario.c;
                mu.density_hi = cap;
            }
            break;
        case SignalKind::hide_large:
            mu.atom_mass = tail_antiderivative(spec, cap) - tail_antiderivative(spec, std::max(scenario.c, cap));
            mu.density_lo = 0.0;
            mu.density_hi = std::min(scenario.c, cap);
            break;
    }
    return mu;
}

double eta_hat(double g, const SignalScenario& scenario, const LevyMarketSpec& spec) {
    if (g == 0.0 || !in_signal_range(spec, scenario, g))
        throw DomainError("eta_hat: g is not a nonzero signal value");
    // On {gamma = +-(1-eps)} eta is constant; elsewhere K(g, .) is a Dirac at g.
    return g;
}

double v_eta(double g, const SignalScenario& scenario, const LevyMarketSpec& spec) {
    if (g == 0.0 || !in_signal_range(spec, scenario, g))
        throw DomainError("v_eta: g is not a nonzero signal value");
    return 0.0;
}

// ---------------------------------------------------------------------------

std::string to_string(GridLayout::Kind kind) {
    return kind == GridLayout::Kind::geometric ? "geometric" : "uniform";
}

GridLayout::Kind parse_layout_kind(const std::string& name) {
    if (name == "geometric") return GridLayout::Kind::geometric;
    if (name == "uniform") return GridLayout::Kind::uniform;
    throw ConfigError("unknown grid layout '" + name + "'");
}

JumpGrid::JumpGrid(const LevyMarketSpec& spec, const std::vector<double>& positive_marks) {
    if (positive_marks.size() < 2) throw ConfigError("jump grid needs q >= 2");
    for (std::size_t j = 0; j < positive_marks.size(); ++j) {
        const double e = positive_marks[j];
        if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("jump grid marks must be finite and > 0");
        if (j > 0 && !(e > positive_marks[j - 1])) throw ConfigError("jump grid marks must be strictly increasing");
    }
    q_ = static_cast<int>(positive_marks.size());
    const auto n = static_cast<Eigen::Index>(2 * q_);
    marks_.resize(n);
    weights_.resize(n);
    eta_.resize(n);

    // Positive side first, then mirror so that nu_{-i} == nu_i bit for bit.
    for (int j = 1; j <= q_; ++j) {
        const double e = positive_marks[j - 1];
        const double prev = j == 1 ? 0.0 : positive_marks[j - 2];
        const double lo = 0.5 * (prev + e);
        const double hi = j == q_ ? kInf : 0.5 * (e + positive_marks[j]);
        const double w = nu_mass(spec, lo, hi);
        const auto pos = static_cast<Eigen::Index>(position(j));
        const auto neg = static_cast<Eigen::Index>(position(-j));
        marks_(pos) = e;
        marks_(neg) = -e;
        weights_(pos) = w;
        weights_(neg) = w;
        eta_(pos) = eta(spec, e);
        eta_(neg) = eta(spec, -e);
    }
    total_intensity_ = weights_.sum();
}

int JumpGrid::signed_index(std::size_t pos) const {
    const int p = static_cast<int>(pos);
    return p < q_ ? p - q_ : p - q_ + 1;
}

std::size_t JumpGrid::position(int i) const {
    if (i == 0 || i < -q_ || i > q_) throw DomainError("JumpGrid::position: index out of range");
    return static_cast<std::size_t>(i < 0 ? i + q_ : i + q_ - 1);
}

int JumpGrid::split_index(double c) const {
    int l = 0;
    for (int j = 1; j <= q_; ++j) {
        if (marks_(static_cast<Eigen::Index>(position(j))) < c) l = j;
    }
    return l;
}

JumpGrid build_grid(int q, const GridLayout& layout, const LevyMarketSpec& spec) {
    if (q < 2) throw ConfigError("grid.q must be >= 2");
    if (!(layout.e_min > 0.0) || !(layout.e_max > layout.e_min))
        throw ConfigError("grid needs 0 < e_min < e_max");
    std::vector<double> marks(static_cast<std::size_t>(q));
    for (int j = 0; j < q; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(q - 1);
        marks[static_cast<std::size_t>(j)] =
            layout.kind == GridLayout::Kind::geometric
                ? layout.e_min * std::pow(layout.e_max / layout.e_min, t)
                : layout.e_min + (layout.e_max - layout.e_min) * t;
    }
    marks.back() = layout.e_max;
    return JumpGrid(spec, marks);
}

Eigen::ArrayXd discrete_signal(const JumpGrid& grid, const SignalScenario& scenario) {
    Eigen::ArrayXd g = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(grid.size()));
    if (scenario.kind == SignalKind::none) return g;
    const int l = grid.split_index(scenario.c);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const int i = std::abs(grid.signed_index(p));
        const bool revealed = scenario.kind == SignalKind::hide_small ? i > l : i <= l;
        if (revealed) g(static_cast<Eigen::Index>(p)) = grid.eta_values()(static_cast<Eigen::Index>(p));
    }
    return g;
}

double snap_to_midpoint(const JumpGrid& grid, double c) {
    std::vector<double> mids{grid.inner_edge()};
    for (int j = 1; j < grid.q(); ++j) {
        mids.push_back(0.5 * (grid.marks()(static_cast<Eigen::Index>(grid.position(j))) +
                              grid.marks()(static_cast<Eigen::Index>(grid.position(j + 1)))));
    }
    return *std::min_element(mids.begin(), mids.end(),
                             [c](double a, double b) { return std::abs(a - c) < std::abs(b - c); });
}

void write_grid_csv(std::ostream& out, const JumpGrid& grid, const SignalScenario& scenario) {
    const Eigen::ArrayXd g = discrete_signal(grid, scenario);
    out << "i,e_i,nu_i,gamma_i,branch\n";
    out.precision(17);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const auto k = static_cast<Eigen::Index>(p);
        out << grid.signed_index(p) << ',' << grid.marks()(k) << ',' << grid.weights()(k) << ',' << g(k) << ','
            << (g(k) != 0.0 ? "signal" : "no_signal") << '\n';
    }
}

}  // namespace sigbsde
