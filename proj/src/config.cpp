#include "conecouple/config.hpp"

#include "conecouple/engine.hpp"
#include "conecouple/error.hpp"
#include "conecouple/graphical.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace conecouple {

namespace {

enum class Kind { integer, real, text, integers, reals, texts };

struct KeySpec {
    Kind kind;
    std::vector<std::string> experiments;  ///< empty: every experiment
    std::optional<ConfigValue> fallback;   ///< default; none means optional or required
    std::vector<std::string> choices;      ///< allowed words for text keys
};

const std::vector<std::string> kernel_experiments{"simulate", "velocities", "theorem1",       "coupling-time",
                                                  "decay",    "duality-check", "boxclear", "extinction-tail",
                                                  "oracle-validate"};
const std::vector<std::string> cone_experiments{"theorem1", "coupling-time", "decay", "boxclear"};

std::vector<std::string> join(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

const std::map<std::string, KeySpec>& schema() {
    using V = ConfigValue;
    using I = std::vector<std::int64_t>;
    using R = std::vector<double>;
    using T = std::vector<std::string>;
    static const std::map<std::string, KeySpec> keys{
        {"experiment", {Kind::text, {}, std::nullopt, experiment_names()}},
        {"seed", {Kind::text, {}, std::nullopt, {}}},
        {"confidence", {Kind::real, {}, V{0.99}, {}}},
        {"M", {Kind::integer, kernel_experiments, std::nullopt, {}}},
        {"mu", {Kind::reals, kernel_experiments, std::nullopt, {}}},
        {"replicates", {Kind::integer, join(cone_experiments, {"velocities", "duality-check", "extinction-tail",
                                                               "oracle-validate"}),
                        std::nullopt, {}}},
        {"horizon", {Kind::real, {"simulate", "velocities", "coupling-time", "boxclear"}, std::nullopt, {}}},
        {"horizons", {Kind::reals, {"theorem1"}, V{R{10, 20, 40}}, {}}},
        {"t_grid", {Kind::reals, {"decay", "extinction-tail"}, std::nullopt, {}}},
        {"t_max", {Kind::real, {"extinction-tail"}, V{100.0}, {}}},
        {"alpha_hat", {Kind::real, cone_experiments, std::nullopt, {}}},
        {"beta_hat", {Kind::real, cone_experiments, std::nullopt, {}}},
        {"eps", {Kind::real, cone_experiments, std::nullopt, {}}},
        {"eps_fraction", {Kind::real, cone_experiments, V{0.2}, {}}},
        {"velocity_horizon", {Kind::real, cone_experiments, V{100.0}, {}}},
        {"velocity_replicates", {Kind::integer, cone_experiments, V{std::int64_t{2000}}, {}}},
        {"window_rule", {Kind::text, cone_experiments, V{std::string("margin")}, {"margin", "lightcone"}}},
        {"window_margin", {Kind::integer, cone_experiments, V{std::int64_t{default_window_margin}}, {}}},
        {"max_uncertified", {Kind::real, cone_experiments, V{0.05}, {}}},
        {"x_rules", {Kind::texts, {"decay"}, V{T{"zero", "left", "right"}}, {"zero", "left", "right"}}},
        {"n0", {Kind::integer, {"boxclear"}, V{std::int64_t{5}}, {}}},
        {"deathfree_replicates", {Kind::integer, {"boxclear"}, V{std::int64_t{1000000}}, {}}},
        {"v_sites", {Kind::integer, {"boxclear"}, std::nullopt, {}}},
        {"p_S", {Kind::real, {"percolation"}, V{0.95}, {}}},
        {"c", {Kind::real, {"percolation"}, V{0.5}, {}}},
        {"a", {Kind::real, {"percolation"}, V{0.5}, {}}},
        {"p_thin", {Kind::real, {"percolation"}, V{0.3}, {}}},
        {"n_grid", {Kind::integers, {"percolation"}, V{I{10, 20, 30, 40, 50, 60}}, {}}},
        {"trials", {Kind::integer, {"percolation"}, V{std::int64_t{100000}}, {}}},
        {"check_trials", {Kind::integer, {"percolation"}, V{std::int64_t{1000}}, {}}},
        {"source_half_width", {Kind::integer, {"percolation"}, V{std::int64_t{0}}, {}}},
        {"placement", {Kind::text, {"percolation"}, V{std::string("even")}, {"even", "left", "right", "center"}}},
        {"n_sites", {Kind::integers, {"oracle-validate"}, V{I{1, 2, 3, 4}}, {}}},
        {"times", {Kind::reals, {"oracle-validate"}, V{R{0.5, 1.0, 2.0}}, {}}},
        {"half_width", {Kind::integer, {"simulate", "duality-check"}, std::nullopt, {}}},
        {"max_half_time", {Kind::real, {"duality-check"}, V{5.0}, {}}},
        {"initial", {Kind::text, {"simulate"}, V{std::string("single")}, {"single", "full"}}},
        {"boundary", {Kind::text, {"simulate"}, V{std::string("vacant")}, {"vacant", "frozen"}}},
    };
    return keys;
}

// Defaults that depend on the experiment.
std::optional<ConfigValue> experiment_default(const std::string& key, const std::string& experiment) {
    using V = ConfigValue;
    if (key == "replicates") {
        if (experiment == "velocities") return V{std::int64_t{2000}};
        if (experiment == "theorem1" || experiment == "coupling-time") return V{std::int64_t{10200}};
        if (experiment == "decay") return V{std::int64_t{100000}};
        if (experiment == "boxclear") return V{std::int64_t{45000}};
        if (experiment == "duality-check") return V{std::int64_t{10000}};
        if (experiment == "extinction-tail") return V{std::int64_t{5000}};
        if (experiment == "oracle-validate") return V{std::int64_t{100000}};
    }
    if (key == "horizon") {
        if (experiment == "velocities") return V{200.0};
        if (experiment == "simulate") return V{10.0};
        return V{40.0};
    }
    if (key == "t_grid") {
        if (experiment == "decay") return V{std::vector<double>{5, 10, 15, 20}};
        return V{std::vector<double>{2, 4, 6, 8, 10, 12, 14, 16, 18, 20}};
    }
    if (key == "half_width") return V{std::int64_t{experiment == "simulate" ? 50 : 30}};
    return std::nullopt;
}

bool applies(const KeySpec& spec, const std::string& experiment) {
    return spec.experiments.empty() ||
           std::find(spec.experiments.begin(), spec.experiments.end(), experiment) != spec.experiments.end();
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

std::optional<std::int64_t> parse_int(const std::string& s) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

std::optional<double> parse_real(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::integer: return "an integer";
        case Kind::real: return "a number";
        case Kind::text: return "a word";
        case Kind::integers: return "a comma-separated list of integers";
        case Kind::reals: return "a comma-separated list of numbers";
        case Kind::texts: return "a comma-separated list of words";
    }
    return "?";
}

std::optional<ConfigValue> parse_value(const KeySpec& spec, const std::string& raw, std::string& why) {
    auto check_choice = [&](const std::string& w) {
        if (spec.choices.empty() || std::find(spec.choices.begin(), spec.choices.end(), w) != spec.choices.end()) {
            return true;
        }
        why = "'" + w + "' is not one of:";
        for (const auto& c : spec.choices) why += " " + c;
        return false;
    };
    switch (spec.kind) {
        case Kind::integer:
            if (auto v = parse_int(raw)) return ConfigValue{*v};
            break;
        case Kind::real:
            if (auto v = parse_real(raw)) return ConfigValue{*v};
            break;
        case Kind::text:
            if (raw.empty() || raw.find(',') != std::string::npos) break;
            if (!check_choice(raw)) return std::nullopt;
            return ConfigValue{raw};
        case Kind::integers: {
            std::vector<std::int64_t> out;
            for (const auto& item : split_list(raw)) {
                const auto v = parse_int(item);
                if (!v) return std::nullopt;
                out.push_back(*v);
            }
            if (out.empty()) break;
            return ConfigValue{out};
        }
        case Kind::reals: {
            std::vector<double> out;
            for (const auto& item : split_list(raw)) {
                const auto v = parse_real(item);
                if (!v) return std::nullopt;
                out.push_back(*v);
            }
            if (out.empty()) break;
            return ConfigValue{out};
        }
        case Kind::texts: {
            std::vector<std::string> out;
            for (const auto& item : split_list(raw)) {
                if (item.empty() || !check_choice(item)) return std::nullopt;
                out.push_back(item);
            }
            if (out.empty()) break;
            return ConfigValue{out};
        }
    }
    return std::nullopt;
}

std::string format_real(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string value_text(const ConfigValue& value) {
    struct Visitor {
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_real(v); }
        std::string operator()(const std::string& v) const { return v; }
        std::string operator()(const std::vector<std::int64_t>& v) const {
            std::string out;
            for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
            return out;
        }
        std::string operator()(const std::vector<double>& v) const {
            std::string out;
            for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_real(v[i]);
            return out;
        }
        std::string operator()(const std::vector<std::string>& v) const {
            std::string out;
            for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
            return out;
        }
    };
    return std::visit(Visitor{}, value);
}

struct RawEntry {
    int line;
    std::string value;
};

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"simulate",     "velocities",      "theorem1",       "coupling-time",
                                                "decay",        "duality-check",   "boxclear",       "percolation",
                                                "extinction-tail", "oracle-validate"};
    return names;
}

struct ConfigParser {
    std::vector<ConfigError> errors;
    std::map<std::string, RawEntry> raw;

    void error(int line, std::string message) { errors.push_back({line, std::move(message)}); }

    void read_line(int line, const std::string& text, bool is_override) {
        std::string body = text.substr(0, text.find('#'));
        body = trim(body);
        if (body.empty()) return;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            error(line, "expected 'key = value', got '" + body + "'");
            return;
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (!schema().count(key)) {
            error(line, "unknown key '" + key + "'");
            return;
        }
        if (!is_override && raw.count(key)) {
            error(line, "duplicate key '" + key + "' (first set on line " + std::to_string(raw[key].line) + ")");
            return;
        }
        raw[key] = {line, value};
    }

    std::optional<RunConfig> finish() {
        RunConfig cfg;
        const auto exp_it = raw.find("experiment");
        if (exp_it == raw.end()) {
            error(0, "missing required key 'experiment'");
        } else {
            const auto& names = experiment_names();
            if (std::find(names.begin(), names.end(), exp_it->second.value) == names.end()) {
                error(exp_it->second.line, "unknown experiment '" + exp_it->second.value + "'");
            } else {
                cfg.experiment_ = exp_it->second.value;
            }
        }
        for (const auto& [key, entry] : raw) {
            const KeySpec& spec = schema().at(key);
            if (!cfg.experiment_.empty() && !applies(spec, cfg.experiment_)) {
                error(entry.line, "key '" + key + "' is not used by experiment '" + cfg.experiment_ + "'");
                continue;
            }
            std::string why;
            auto value = parse_value(spec, entry.value, why);
            if (!value) {
                error(entry.line, "key '" + key + "' must be " + kind_name(spec.kind) +
                                      (why.empty() ? "" : " (" + why + ")") + ", got '" + entry.value + "'");
                continue;
            }
            cfg.values_[key] = std::move(*value);
        }
        if (cfg.experiment_.empty()) return std::nullopt;

        for (const auto& [key, spec] : schema()) {
            if (!applies(spec, cfg.experiment_) || cfg.values_.count(key) || raw.count(key)) continue;
            if (spec.fallback) {
                cfg.values_[key] = *spec.fallback;
            } else if (auto v = experiment_default(key, cfg.experiment_)) {
                cfg.values_[key] = *v;
            }
        }
        validate(cfg);
        if (!errors.empty()) return std::nullopt;
        return cfg;
    }

    int line_of(const std::string& key) const {
        const auto it = raw.find(key);
        return it == raw.end() ? 0 : it->second.line;
    }

    void require_positive_int(const RunConfig& cfg, const std::string& key) {
        if (cfg.has(key) && cfg.integer(key) <= 0) error(line_of(key), key + " must be > 0");
    }
    void require_positive_real(const RunConfig& cfg, const std::string& key) {
        if (cfg.has(key) && !(cfg.real(key) > 0.0)) error(line_of(key), key + " must be > 0");
    }

    void validate(const RunConfig& cfg) {
        const std::string& exp = cfg.experiment_;
        const bool needs_kernel = std::find(kernel_experiments.begin(), kernel_experiments.end(), exp) !=
                                  kernel_experiments.end();
        if (needs_kernel) {
            if (!cfg.has("M")) error(0, "missing required key 'M'");
            if (!cfg.has("mu")) error(0, "missing required key 'mu'");
            if (cfg.has("M") && cfg.has("mu")) {
                try {
                    InteractionKernel(static_cast<int>(cfg.integer("M")), cfg.reals("mu"));
                } catch (const ParameterError& e) {
                    error(line_of("mu"), std::string("InteractionKernel: ") + e.what());
                }
            }
        }
        if (cfg.has("seed")) {
            const auto& s = cfg.text("seed");
            std::uint64_t v = 0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
                error(line_of("seed"), "seed must be an unsigned 64-bit integer, got '" + s + "'");
            }
        }
        for (const char* key : {"replicates", "velocity_replicates", "trials", "deathfree_replicates", "half_width",
                                "check_trials", "v_sites"}) {
            require_positive_int(cfg, key);
        }
        for (const char* key : {"horizon", "t_max", "velocity_horizon", "max_half_time", "eps_fraction"}) {
            require_positive_real(cfg, key);
        }
        if (cfg.has("n0") && cfg.integer("n0") < 0) error(line_of("n0"), "n0 must be >= 0");
        if (cfg.has("window_margin") && cfg.integer("window_margin") < 0) {
            error(line_of("window_margin"), "window_margin must be >= 0");
        }
        if (cfg.has("confidence") && !(cfg.real("confidence") > 0.0 && cfg.real("confidence") < 1.0)) {
            error(line_of("confidence"), "confidence must lie in (0, 1)");
        }
        if (cfg.has("max_uncertified") && !(cfg.real("max_uncertified") >= 0.0 && cfg.real("max_uncertified") <= 1.0)) {
            error(line_of("max_uncertified"), "max_uncertified must lie in [0, 1]");
        }
        for (const char* key : {"horizons", "t_grid", "times"}) {
            if (!cfg.has(key)) continue;
            for (double v : cfg.reals(key)) {
                if (v < 0.0) error(line_of(key), std::string(key) + " entries must be >= 0");
            }
        }
        if (cfg.has("horizons")) {
            for (double v : cfg.reals("horizons")) {
                if (!(v > 0.0)) error(line_of("horizons"), "horizons entries must be > 0");
            }
        }
        if (exp == "extinction-tail" && cfg.has("t_grid") && cfg.has("t_max")) {
            for (double v : cfg.reals("t_grid")) {
                if (!(v < cfg.real("t_max"))) error(line_of("t_grid"), "t_grid entries must be below t_max");
            }
        }
        if (exp == "boxclear" && cfg.has("n0") && cfg.has("horizon") && !(cfg.real("horizon") > cfg.integer("n0"))) {
            error(line_of("horizon"), "boxclear needs horizon > n0");
        }
        if (cfg.has("n_sites")) {
            for (auto n : cfg.integers("n_sites")) {
                if (n < 1 || n > 12) error(line_of("n_sites"), "n_sites entries must lie in [1, 12]");
            }
        }
        if (cfg.has("n_grid")) {
            for (auto n : cfg.integers("n_grid")) {
                if (n < 1) error(line_of("n_grid"), "n_grid entries must be >= 1");
            }
        }
        if (exp == "percolation") {
            const double ps = cfg.real("p_S"), a = cfg.real("a"), c = cfg.real("c"), pt = cfg.real("p_thin");
            if (!(ps > 0.0 && ps <= 1.0)) error(line_of("p_S"), "p_S must lie in (0, 1]");
            if (!(a > 0.0 && a < 1.0)) error(line_of("a"), "a must lie in (0, 1)");
            if (!(c > 0.0)) error(line_of("c"), "c must be > 0");
            if (!(pt > 0.0 && pt <= 1.0)) error(line_of("p_thin"), "p_thin must lie in (0, 1]");
            const auto w = cfg.integer("source_half_width");
            if (w < 0 || w % 2 != 0) error(line_of("source_half_width"), "source_half_width must be even and >= 0");
        }
        const bool has_alpha = cfg.has("alpha_hat"), has_beta = cfg.has("beta_hat");
        if (has_alpha != has_beta) error(line_of(has_alpha ? "alpha_hat" : "beta_hat"), "give both alpha_hat and beta_hat or neither");
        if (has_alpha && has_beta) {
            const double alpha = cfg.real("alpha_hat"), beta = cfg.real("beta_hat");
            const double eps = cfg.has("eps") ? cfg.real("eps") : cfg.real("eps_fraction") * (alpha - beta);
            try {
                ConeSpec{alpha, beta, eps}.validate();
            } catch (const ParameterError& e) {
                error(line_of(cfg.has("eps") ? "eps" : "eps_fraction"), e.what());
            }
        }
    }
};

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

namespace {

template <class T>
const T& get(const std::map<std::string, ConfigValue>& values, const std::string& key) {
    const auto it = values.find(key);
    if (it == values.end()) throw ParameterError("configuration key '" + key + "' is not set");
    if (const T* v = std::get_if<T>(&it->second)) return *v;
    throw ParameterError("configuration key '" + key + "' has another type");
}

}  // namespace

std::int64_t RunConfig::integer(const std::string& key) const { return get<std::int64_t>(values_, key); }
double RunConfig::real(const std::string& key) const { return get<double>(values_, key); }
const std::string& RunConfig::text(const std::string& key) const { return get<std::string>(values_, key); }
std::vector<std::int64_t> RunConfig::integers(const std::string& key) const {
    return get<std::vector<std::int64_t>>(values_, key);
}
std::vector<double> RunConfig::reals(const std::string& key) const { return get<std::vector<double>>(values_, key); }
std::vector<std::string> RunConfig::texts(const std::string& key) const {
    return get<std::vector<std::string>>(values_, key);
}

std::optional<std::uint64_t> RunConfig::seed() const {
    if (!has("seed")) return std::nullopt;
    const auto& s = text("seed");
    std::uint64_t v = 0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

std::string RunConfig::to_text() const {
    std::string out = "experiment = " + experiment_ + "\n";
    for (const auto& [key, value] : values_) {
        if (key == "experiment") continue;
        out += key + " = " + value_text(value) + "\n";
    }
    return out;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, value] : values_) {
        std::visit([&](const auto& v) { j[key] = v; }, value);
    }
    j["experiment"] = experiment_;
    return j;
}

ParseResult parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    ConfigParser parser;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) parser.read_line(++number, line, false);
    for (const auto& ov : overrides) parser.read_line(++number, ov, true);
    ParseResult result;
    result.config = parser.finish();
    result.errors = std::move(parser.errors);
    if (!result.errors.empty()) result.config.reset();
    return result;
}

}  // namespace conecouple
