#include "sigbsde/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "sigbsde/errors.hpp"
#include "sigbsde/numerics.hpp"
#include "sigbsde/random.hpp"

namespace sigbsde {

namespace {

constexpr std::uint32_t kBrownianChannel = 0;
constexpr std::uint32_t kJumpChannel = 1;
constexpr double kMaxUtilityExponent = 700.0;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

TimeGrid TimeGrid::uniform(std::size_t n_steps, double horizon) {
    if (n_steps == 0) throw ConfigError("time grid needs at least one step");
    if (!(horizon > 0.0)) throw ConfigError("time grid horizon must be > 0");
    TimeGrid grid;
    grid.times.resize(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) grid.times[k] = horizon * static_cast<double>(k) / n_steps;
    grid.times.back() = horizon;
    return grid;
}

void TimeGrid::validate() const {
    if (times.size() < 2 || times.front() != 0.0) throw ConfigError("time grid must start at 0 with >= 1 step");
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        if (!(times[k + 1] > times[k])) throw ConfigError("time grid must be strictly increasing");
    }
}

Eigen::ArrayXd PathBatch::compensated(std::size_t k, std::size_t bin, double weight) const {
    return jumps[k].col(static_cast<Eigen::Index>(bin)).cast<double>().array() - weight * dt[k];
}

PathBatch simulate_batch(const LevyMarketSpec& spec, const JumpGrid& grid, const TimeGrid& time_grid,
                         std::size_t n_paths, std::uint64_t seed) {
    spec.validate();
    time_grid.validate();
    if (n_paths == 0) throw ConfigError("simulate_batch: n_paths must be >= 1");

    const std::size_t n_steps = time_grid.steps();
    const auto n_bins = static_cast<Eigen::Index>(grid.size());
    const auto rows = static_cast<Eigen::Index>(n_paths);

    PathBatch batch;
    batch.seed = seed;
    batch.dt.resize(n_steps);
    for (std::size_t k = 0; k < n_steps; ++k) batch.dt[k] = time_grid.dt(k);
    batch.dW.resize(rows, static_cast<Eigen::Index>(n_steps));
    batch.S.resize(rows, static_cast<Eigen::Index>(n_steps + 1));
    batch.jumps.assign(n_steps, JumpCounts::Zero(rows, n_bins));

    const Eigen::ArrayXd& nu = grid.weights();
    const Eigen::ArrayXd& eta = grid.eta_values();
    const double intensity = grid.total_intensity();
    std::vector<double> cdf(static_cast<std::size_t>(n_bins));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n_bins; ++i) {
        acc += nu(i);
        cdf[static_cast<std::size_t>(i)] = intensity > 0.0 ? acc / intensity : 1.0;
    }
    if (!cdf.empty()) cdf.back() = 1.0;
    const Eigen::ArrayXd log_jump = (1.0 + eta).log();
    const double compensator = (eta * nu).sum();
    const double drift = spec.kappa - 0.5 * spec.sigma * spec.sigma - compensator;

    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t path = begin; path < end; ++path) {
            const auto r = static_cast<Eigen::Index>(path);
            double log_s = std::log(spec.s0);
            batch.S(r, 0) = spec.s0;
            for (std::size_t k = 0; k < n_steps; ++k) {
                const auto c = static_cast<Eigen::Index>(k);
                const double dt = batch.dt[k];
                CounterStream brownian(seed, path, static_cast<std::uint32_t>(k), kBrownianChannel);
                const double dw = std::sqrt(dt) * brownian.normal();
                batch.dW(r, c) = dw;
                log_s += drift * dt + spec.sigma * dw;

                CounterStream jumps(seed, path, static_cast<std::uint32_t>(k), kJumpChannel);
                const std::uint32_t count = jumps.poisson(intensity * dt);
                for (std::uint32_t j = 0; j < count; ++j) {
                    const double u = jumps.uniform();
                    const auto bin = static_cast<Eigen::Index>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
                    auto& slot = batch.jumps[k](r, bin);
                    if (slot == std::numeric_limits<std::uint16_t>::max())
                        throw NumericError("simulate_batch: jump count overflow");
                    ++slot;
                    log_s += log_jump(bin);
                }
                batch.S(r, c + 1) = std::exp(log_s);
            }
        }
    });
    return batch;
}

void write_batch_csv(std::ostream& out, const PathBatch& batch, const JumpGrid& grid) {
    out.precision(17);
    out << "# seed=" << batch.seed << "\n# dt=";
    for (std::size_t k = 0; k < batch.dt.size(); ++k) out << (k ? ";" : "") << batch.dt[k];
    out << "\npath,k,dW";
    for (std::size_t p = 0; p < grid.size(); ++p) out << ",dN(" << grid.signed_index(p) << ')';
    out << ",S\n";
    const std::size_t n_steps = batch.n_steps();
    for (std::size_t path = 0; path < batch.n_paths(); ++path) {
        const auto r = static_cast<Eigen::Index>(path);
        for (std::size_t k = 0; k <= n_steps; ++k) {
            const auto c = static_cast<Eigen::Index>(k);
            out << path << ',' << k << ',' << (k < n_steps ? batch.dW(r, c) : 0.0);
            for (std::size_t b = 0; b < batch.n_bins(); ++b) {
                out << ',' << (k < n_steps ? batch.jumps[k](r, static_cast<Eigen::Index>(b)) : 0);
            }
            out << ',' << batch.S(r, c) << '\n';
        }
    }
}

PathBatch read_batch_csv(std::istream& in) {
    PathBatch batch;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        throw ConfigError("batch csv line " + std::to_string(line_no) + ": " + what);
    };
    std::size_t n_bins = 0;
    bool header_seen = false;
    struct Row {
        std::size_t path, k;
        double dw, s;
        std::vector<std::uint16_t> counts;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.rfind("# seed=", 0) == 0) {
            batch.seed = std::stoull(line.substr(7));
            continue;
        }
        if (line.rfind("# dt=", 0) == 0) {
            for (const auto& f : split(line.substr(5), ';')) batch.dt.push_back(std::stod(f));
            continue;
        }
        const auto fields = split(line, ',');
        if (!header_seen) {
            if (fields.size() < 4 || fields[0] != "path") fail("missing header");
            n_bins = fields.size() - 4;
            header_seen = true;
            continue;
        }
        if (fields.size() != n_bins + 4) fail("wrong field count");
        try {
            Row row{std::stoul(fields[0]), std::stoul(fields[1]), std::stod(fields[2]), std::stod(fields.back()), {}};
            for (std::size_t b = 0; b < n_bins; ++b)
                row.counts.push_back(static_cast<std::uint16_t>(std::stoul(fields[3 + b])));
            rows.push_back(std::move(row));
        } catch (const std::exception&) {
            fail("unparsable field");
        }
    }
    if (!header_seen) throw ConfigError("batch csv: empty input");
    const std::size_t n_steps = batch.dt.size();
    if (n_steps == 0 || rows.size() % (n_steps + 1) != 0) throw ConfigError("batch csv: inconsistent row count");
    const std::size_t n_paths = rows.size() / (n_steps + 1);
    const auto np = static_cast<Eigen::Index>(n_paths);
    batch.dW.resize(np, static_cast<Eigen::Index>(n_steps));
    batch.S.resize(np, static_cast<Eigen::Index>(n_steps + 1));
    batch.jumps.assign(n_steps, JumpCounts::Zero(np, static_cast<Eigen::Index>(n_bins)));
    for (const Row& row : rows) {
        if (row.path >= n_paths || row.k > n_steps) throw ConfigError("batch csv: index out of range");
        const auto r = static_cast<Eigen::Index>(row.path);
        const auto c = static_cast<Eigen::Index>(row.k);
        batch.S(r, c) = row.s;
        if (row.k < n_steps) {
            batch.dW(r, c) = row.dw;
            for (std::size_t b = 0; b < n_bins; ++b) batch.jumps[row.k](r, static_cast<Eigen::Index>(b)) = row.counts[b];
        }
    }
    return batch;
}

// ---------------------------------------------------------------------------

double payoff_put(double s_t, double strike) {
    if (!(strike > 0.0)) throw DomainError("payoff_put: strike must be > 0");
    return std::max(strike - s_t, 0.0);
}

void Payoff::validate() const {
    if (kind == Kind::table) {
        if (table.size() < 2) throw ConfigError("table payoff needs at least two knots");
        for (std::size_t i = 1; i < table.size(); ++i) {
            if (!(table[i].first > table[i - 1].first)) throw ConfigError("table payoff knots must increase in S");
        }
    } else if (!(strike > 0.0)) {
        throw ConfigError("payoff.strike must be > 0");
    }
}

double Payoff::operator()(double s) const {
    switch (kind) {
        case Kind::put: return payoff_put(s, strike);
        case Kind::call: return std::max(s - strike, 0.0);
        case Kind::digital: return s < strike ? 1.0 : 0.0;
        case Kind::table: {
            if (s <= table.front().first) return table.front().second;
            if (s >= table.back().first) return table.back().second;
            const auto it = std::upper_bound(table.begin(), table.end(), s,
                                             [](double v, const auto& knot) { return v < knot.first; });
            const auto& [s1, v1] = *it;
            const auto& [s0, v0] = *(it - 1);
            return v0 + (v1 - v0) * (s - s0) / (s1 - s0);
        }
    }
    return 0.0;
}

double Payoff::sup_norm() const {
    switch (kind) {
        case Kind::put: return strike;
        case Kind::call: return std::numeric_limits<double>::infinity();
        case Kind::digital: return 1.0;
        case Kind::table: {
            double m = 0.0;
            for (const auto& knot : table) m = std::max(m, std::abs(knot.second));
            return m;
        }
    }
    return 0.0;
}

std::string to_string(Payoff::Kind kind) {
    switch (kind) {
        case Payoff::Kind::put: return "put";
        case Payoff::Kind::call: return "call";
        case Payoff::Kind::digital: return "digital";
        case Payoff::Kind::table: return "table";
    }
    return "unknown";
}

Payoff::Kind parse_payoff_kind(const std::string& name) {
    if (name == "put") return Payoff::Kind::put;
    if (name == "call") return Payoff::Kind::call;
    if (name == "digital") return Payoff::Kind::digital;
    if (name == "table") return Payoff::Kind::table;
    throw ConfigError("unknown payoff type '" + name + "'");
}

Eigen::ArrayXd evaluate_payoff(const PathBatch& batch, const Payoff& payoff) {
    payoff.validate();
    const Eigen::Index last = batch.S.cols() - 1;
    return batch.S.col(last).array().unaryExpr([&payoff](double s) { return payoff(s); });
}

// ---------------------------------------------------------------------------

StrategyTable::StrategyTable(double pi_lower, double pi_upper, PositionFn fn)
    : pi_lower_(pi_lower), pi_upper_(pi_upper), fn_(std::move(fn)) {
    if (!(pi_lower >= 0.0) || !(pi_upper >= 0.0)) throw ConfigError("strategy bounds must be >= 0");
}

StrategyTable StrategyTable::constant(double pi_lower, double pi_upper, double p) {
    return {pi_lower, pi_upper, [p](std::size_t, double, double) { return p; }};
}

StrategyTable StrategyTable::from_map(double pi_lower, double pi_upper, double p0, std::map<double, double> by_signal) {
    return {pi_lower, pi_upper, [p0, table = std::move(by_signal)](std::size_t, double, double g) {
                if (g == 0.0) return p0;
                auto it = table.lower_bound(g - 1e-12);
                if (it == table.end() || std::abs(it->first - g) > 1e-12)
                    throw DomainError("StrategyTable: no position for signal value");
                return it->second;
            }};
}

double StrategyTable::position(std::size_t k, double s, double g) const {
    const double p = fn_(k, s, g);
    if (!(p >= -pi_lower_ && p <= pi_upper_)) throw DomainError("StrategyTable: position outside [-pi_lower, pi_upper]");
    return p;
}

Eigen::ArrayXd wealth_forward(const PathBatch& batch, const LevyMarketSpec& spec, const JumpGrid& grid,
                              const SignalScenario& scenario, const StrategyTable& strategy, double x0) {
    const Eigen::ArrayXd g = discrete_signal(grid, scenario);
    const Eigen::ArrayXd& eta = grid.eta_values();
    const double compensator = (eta * grid.weights()).sum();
    const std::size_t n_paths = batch.n_paths();
    const std::size_t n_bins = batch.n_bins();
    if (n_bins != grid.size()) throw DomainError("wealth_forward: batch and grid disagree on bin count");
    Eigen::ArrayXd wealth(static_cast<Eigen::Index>(n_paths));

    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t path = begin; path < end; ++path) {
            const auto r = static_cast<Eigen::Index>(path);
            double x = x0;
            for (std::size_t k = 0; k < batch.n_steps(); ++k) {
                const auto c = static_cast<Eigen::Index>(k);
                const double dt = batch.dt[k];
                const double s = batch.S(r, c);
                const double p0 = strategy.position(k, s, 0.0);
                x += p0 * (spec.kappa * dt + spec.sigma * batch.dW(r, c)) - p0 * compensator * dt;
                for (std::size_t b = 0; b < n_bins; ++b) {
                    const auto bi = static_cast<Eigen::Index>(b);
                    const std::uint16_t n = batch.jumps[k](r, bi);
                    if (n == 0) continue;
                    const double p = g(bi) == 0.0 ? p0 : strategy.position(k, s, g(bi));
                    x += p * eta(bi) * n;
                }
            }
            wealth(r) = x;
        }
    });
    return wealth;
}

UtilityEstimate mc_expected_utility(const Eigen::ArrayXd& wealth, const Eigen::ArrayXd& payoff, double lambda) {
    if (wealth.size() != payoff.size() || wealth.size() == 0)
        throw DomainError("mc_expected_utility: arrays must be aligned and non-empty");
    const Eigen::ArrayXd arg = -lambda * (wealth - payoff);
    if ((arg > kMaxUtilityExponent).any()) throw DomainError("mc_expected_utility: exponent overflow");
    const Eigen::ArrayXd v = -arg.exp();
    const double mean = pairwise_mean(v);
    const auto n = static_cast<double>(v.size());
    if (v.size() == 1 || v.minCoeff() == v.maxCoeff()) return {v(0), 0.0};
    const double var = pairwise_sum((v - mean).square().eval()) / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

}  // namespace sigbsde
