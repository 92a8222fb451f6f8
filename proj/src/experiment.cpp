#include "sigbsde/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sigbsde/errors.hpp"
#include "sigbsde/numerics.hpp"

namespace sigbsde {

using nlohmann::json;

void ExperimentConfig::validate() const {
    market.validate();
    if (q < 2) throw ConfigError("grid.q must be >= 2");
    if (!(layout.e_min > 0.0) || !(layout.e_max > layout.e_min))
        throw ConfigError("grid needs 0 < e_min < e_max");
    if (n_steps < 1) throw ConfigError("scheme.n_steps must be >= 1");
    if (n_paths < 2) throw ConfigError("scheme.n_paths must be >= 2");
    partition.validate();
    if (seeds.empty()) throw ConfigError("scheme.seeds must not be empty");
    if (variants.empty()) throw ConfigError("scenario.variant must not be empty");
    for (const double c : c_values) {
        if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("scenario.c values must be finite and > 0");
    }
    payoff.validate();
    utility.validate();
    if (!(driver.minimizer_tol > 0.0) || driver.minimizer_max_iter < 1)
        throw ConfigError("minimizer tolerance and iteration cap must be positive");
}

double ExperimentConfig::effective_kappa() const {
    return kappa_compensate ? integral_eta_nu(market) : market.kappa;
}

PipelineConfig ExperimentConfig::pipeline(const SignalScenario& scenario) const {
    PipelineConfig p;
    p.market = market;
    p.market.kappa = effective_kappa();
    p.q = q;
    p.layout = layout;
    p.n_steps = n_steps;
    p.n_paths = n_paths;
    p.partition = partition;
    p.payoff = payoff;
    p.utility = utility;
    p.driver = driver;
    p.scenario = scenario;
    return p;
}

ExperimentConfig reference_profile() {
    ExperimentConfig cfg;
    cfg.driver.sigma_in_square = false;
    return cfg;
}

namespace {

std::string to_string(Design d) { return d == Design::constant ? "constant" : "linear"; }

Design parse_design(const std::string& s) {
    if (s == "constant") return Design::constant;
    if (s == "linear") return Design::linear;
    throw ConfigError("unknown design '" + s + "' (expected constant or linear)");
}

/// Reads keys of one JSON object, rejecting anything not consumed.
class Block {
public:
    Block(const json& root, const std::string& name) : name_(name) {
        if (!root.contains(name)) return;
        node_ = &root.at(name);
        if (!node_->is_object()) throw ConfigError("'" + name + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!node_ || !node_->contains(key)) return;
        try {
            out = node_->at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(name_ + "." + key + ": " + e.what());
        }
    }

    [[nodiscard]] const json* raw(const char* key) {
        seen_.insert(key);
        if (!node_ || !node_->contains(key)) return nullptr;
        return &node_->at(key);
    }

    void finish() const {
        if (!node_) return;
        for (const auto& [key, value] : node_->items()) {
            if (!seen_.count(key)) throw ConfigError("unknown key '" + name_ + "." + key + "'");
        }
    }

private:
    std::string name_;
    const json* node_ = nullptr;
    std::set<std::string> seen_;
};

const std::set<std::string> kBlocks{"market", "grid", "scheme", "scenario", "payoff", "utility", "flags"};

json to_json(const ExperimentConfig& cfg) {
    json j;
    j["market"] = {{"rho", cfg.market.rho},     {"alpha", cfg.market.alpha}, {"epsilon", cfg.market.epsilon},
                   {"sigma", cfg.market.sigma}, {"s0", cfg.market.s0},       {"T", cfg.market.T}};
    if (cfg.kappa_compensate)
        j["market"]["kappa"] = "compensate";
    else
        j["market"]["kappa"] = cfg.market.kappa;
    j["grid"] = {{"q", cfg.q},
                 {"e_min", cfg.layout.e_min},
                 {"e_max", cfg.layout.e_max},
                 {"layout", to_string(cfg.layout.kind)}};
    j["scheme"] = {{"n_steps", cfg.n_steps},
                   {"n_paths", cfg.n_paths},
                   {"cells", cfg.partition.cells},
                   {"min_cell_paths", cfg.partition.min_cell_paths},
                   {"design", to_string(cfg.partition.design)},
                   {"seeds", cfg.seeds},
                   {"minimizer_tol", cfg.driver.minimizer_tol},
                   {"minimizer_max_iter", cfg.driver.minimizer_max_iter}};
    json variants = json::array();
    for (const auto v : cfg.variants) variants.push_back(to_string(v));
    j["scenario"] = {{"variant", variants}, {"c", cfg.c_values}};
    j["payoff"] = {{"type", to_string(cfg.payoff.kind)}, {"strike", cfg.payoff.strike}};
    if (cfg.payoff.kind == Payoff::Kind::table) j["payoff"]["table"] = cfg.payoff.table;
    j["utility"] = {{"lambda", cfg.utility.lambda},
                    {"pi_lower", cfg.utility.pi_lower},
                    {"pi_upper", cfg.utility.pi_upper},
                    {"x", cfg.utility.x0}};
    j["flags"] = {{"sigma_in_square", cfg.driver.sigma_in_square}};
    return j;
}

ExperimentConfig from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!kBlocks.count(key)) throw ConfigError("unknown block '" + key + "'");
    }
    ExperimentConfig cfg;

    Block market(j, "market");
    market.get("rho", cfg.market.rho);
    market.get("alpha", cfg.market.alpha);
    market.get("epsilon", cfg.market.epsilon);
    market.get("sigma", cfg.market.sigma);
    market.get("s0", cfg.market.s0);
    market.get("T", cfg.market.T);
    if (const json* k = market.raw("kappa")) {
        if (k->is_string()) {
            if (k->get<std::string>() != "compensate") throw ConfigError("market.kappa must be a number or \"compensate\"");
            cfg.kappa_compensate = true;
        } else if (k->is_number()) {
            cfg.kappa_compensate = false;
            cfg.market.kappa = k->get<double>();
        } else {
            throw ConfigError("market.kappa must be a number or \"compensate\"");
        }
    }
    market.finish();

    Block grid(j, "grid");
    grid.get("q", cfg.q);
    grid.get("e_min", cfg.layout.e_min);
    grid.get("e_max", cfg.layout.e_max);
    std::string layout = to_string(cfg.layout.kind);
    grid.get("layout", layout);
    cfg.layout.kind = parse_layout_kind(layout);
    grid.finish();

    Block scheme(j, "scheme");
    scheme.get("n_steps", cfg.n_steps);
    scheme.get("n_paths", cfg.n_paths);
    scheme.get("cells", cfg.partition.cells);
    scheme.get("min_cell_paths", cfg.partition.min_cell_paths);
    std::string design = to_string(cfg.partition.design);
    scheme.get("design", design);
    cfg.partition.design = parse_design(design);
    scheme.get("seeds", cfg.seeds);
    scheme.get("minimizer_tol", cfg.driver.minimizer_tol);
    scheme.get("minimizer_max_iter", cfg.driver.minimizer_max_iter);
    scheme.finish();

    Block scenario(j, "scenario");
    if (const json* v = scenario.raw("variant")) {
        cfg.variants.clear();
        if (v->is_string()) {
            cfg.variants.push_back(parse_signal_kind(v->get<std::string>()));
        } else if (v->is_array()) {
            for (const auto& item : *v) {
                if (!item.is_string()) throw ConfigError("scenario.variant entries must be strings");
                cfg.variants.push_back(parse_signal_kind(item.get<std::string>()));
            }
        } else {
            throw ConfigError("scenario.variant must be a string or a list");
        }
    }
    scenario.get("c", cfg.c_values);
    scenario.finish();

    Block payoff(j, "payoff");
    std::string type = to_string(cfg.payoff.kind);
    payoff.get("type", type);
    cfg.payoff.kind = parse_payoff_kind(type);
    payoff.get("strike", cfg.payoff.strike);
    payoff.get("table", cfg.payoff.table);
    payoff.finish();

    Block utility(j, "utility");
    utility.get("lambda", cfg.utility.lambda);
    utility.get("pi_lower", cfg.utility.pi_lower);
    utility.get("pi_upper", cfg.utility.pi_upper);
    utility.get("x", cfg.utility.x0);
    utility.finish();

    Block flags(j, "flags");
    flags.get("sigma_in_square", cfg.driver.sigma_in_square);
    flags.finish();

    cfg.validate();
    return cfg;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string sanitize(std::string s) {
    std::replace_if(s.begin(), s.end(), [](char ch) { return ch == ',' || ch == '\n' || ch == '\r'; }, ' ');
    return s;
}

const char* kResultsHeader = "scenario,c,seed,config_hash,y0,value,wall_time,status,message";

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string dump_config(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : to_json(cfg).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, std::ostream* log) {
    cfg.validate();
    const std::string hash = config_hash(cfg);

    std::vector<SignalScenario> scenarios;
    for (const auto kind : cfg.variants) {
        if (kind == SignalKind::none) {
            scenarios.push_back(SignalScenario::no_signal());
            continue;
        }
        for (const double c : cfg.c_values) scenarios.push_back({kind, c});
    }

    const PipelineConfig base = cfg.pipeline(SignalScenario::no_signal());
    const JumpGrid grid = make_grid(base);
    // rows[scenario][seed]
    std::vector<std::vector<SweepRow>> rows(scenarios.size(), std::vector<SweepRow>(cfg.seeds.size()));
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        const std::uint64_t seed = cfg.seeds[s];
        const PathBatch batch = make_batch(base, grid, seed);
        for (std::size_t j = 0; j < scenarios.size(); ++j) {
            SweepRow& row = rows[j][s];
            row.scenario = scenarios[j].name();
            row.c = scenarios[j].c;
            row.seed = seed;
            row.config_hash = hash;
            const auto start = std::chrono::steady_clock::now();
            try {
                const PipelineRun run = run_on_batch(cfg.pipeline(scenarios[j]), grid, batch);
                row.y0 = run.solution.y0;
                row.value = run.value;
            } catch (const std::exception& e) {
                row.ok = false;
                row.y0 = row.value = std::numeric_limits<double>::quiet_NaN();
                row.message = sanitize(e.what());
            }
            row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (log) {
                *log << row.scenario << " c=" << row.c << " seed=" << seed << " Y0=" << row.y0
                     << (row.ok ? "" : " FAILED: " + row.message) << '\n';
            }
        }
    }
    std::vector<SweepRow> out;
    for (auto& per_scenario : rows) {
        for (auto& row : per_scenario) out.push_back(std::move(row));
    }
    return out;
}

void write_results_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << kResultsHeader << '\n';
    out.precision(17);
    for (const auto& r : rows) {
        out << r.scenario << ',' << r.c << ',' << r.seed << ',' << r.config_hash << ',' << r.y0 << ',' << r.value
            << ',' << r.wall_time << ',' << (r.ok ? "ok" : "failed") << ',' << sanitize(r.message) << '\n';
    }
}

std::vector<SweepRow> read_results_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kResultsHeader)
        throw ConfigError("results line 1: expected header '" + std::string(kResultsHeader) + "'");
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        const std::string where = "results line " + std::to_string(line_no) + ": ";
        if (fields.size() != 9)
            throw ConfigError(where + "expected 9 fields, got " + std::to_string(fields.size()));
        SweepRow r;
        try {
            std::size_t used = 0;
            auto number = [&](const std::string& s) {
                const double v = std::stod(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return v;
            };
            r.scenario = fields[0];
            (void)parse_signal_kind(r.scenario);
            r.c = number(fields[1]);
            r.seed = std::stoull(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument(fields[2]);
            r.config_hash = fields[3];
            r.y0 = number(fields[4]);
            r.value = number(fields[5]);
            r.wall_time = number(fields[6]);
        } catch (const std::exception& e) {
            throw ConfigError(where + "bad value (" + e.what() + ")");
        }
        if (fields[7] != "ok" && fields[7] != "failed") throw ConfigError(where + "status must be ok or failed");
        r.ok = fields[7] == "ok";
        r.message = fields[8];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows) {
    std::map<std::pair<std::string, double>, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : rows) {
        if (!r.ok) continue;
        auto& g = groups[{r.scenario, r.c}];
        g.first.push_back(r.y0);
        g.second.push_back(r.value);
    }
    std::vector<SweepSummary> out;
    for (auto& [key, g] : groups) {
        SweepSummary s;
        s.scenario = key.first;
        s.c = key.second;
        s.runs = g.first.size();
        const MultiRunResult y = summarize_runs(g.first);
        s.mean_y0 = y.mean;
        s.spread = y.spread;
        s.mean_value = summarize_runs(g.second).mean;
        out.push_back(s);
    }
    return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& summary) {
    out << "scenario,c,runs,mean_y0,spread,mean_value\n";
    out.precision(17);
    for (const auto& s : summary) {
        out << s.scenario << ',' << s.c << ',' << s.runs << ',' << s.mean_y0 << ',' << s.spread << ','
            << s.mean_value << '\n';
    }
}

std::vector<std::filesystem::path> write_report(const std::vector<SweepRow>& rows, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto summary = summarize(rows);
    std::vector<std::filesystem::path> written;
    std::map<std::string, std::ofstream> files;
    for (const auto& s : summary) {
        auto it = files.find(s.scenario);
        if (it == files.end()) {
            const auto path = dir / (s.scenario + ".dat");
            it = files.emplace(s.scenario, std::ofstream(path)).first;
            if (!it->second) throw std::runtime_error("cannot write " + path.string());
            it->second.precision(17);
            written.push_back(path);
        }
        it->second << s.c << ' ' << s.mean_y0 << '\n';
    }
    const auto text = dir / "summary.txt";
    std::ofstream out(text);
    if (!out) throw std::runtime_error("cannot write " + text.string());
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.ok ? 0 : 1;
    out << "rows " << rows.size() << ", failed " << failed << '\n';
    out.precision(10);
    for (const auto& s : summary) {
        out << s.scenario << " c=" << s.c << " runs=" << s.runs << " mean_Y0=" << s.mean_y0 << " spread=" << s.spread
            << " mean_V=" << s.mean_value << '\n';
    }
    written.push_back(text);
    return written;
}

}  // namespace sigbsde
