#include "conecouple/run.hpp"

#include "conecouple/error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <ostream>

namespace conecouple {

namespace {

InteractionKernel kernel_of(const RunConfig& cfg) {
    return InteractionKernel(static_cast<int>(cfg.integer("M")), cfg.reals("mu"));
}

std::uint64_t count_of(const RunConfig& cfg, const std::string& key) {
    return static_cast<std::uint64_t>(cfg.integer(key));
}

RunContext context_of(const RunConfig& cfg, std::uint64_t seed, unsigned workers) {
    RunContext ctx;
    ctx.seed = seed;
    ctx.workers = workers;
    ctx.confidence = cfg.real("confidence");
    if (cfg.has("window_rule")) {
        ctx.window.rule = cfg.text("window_rule") == "lightcone" ? WindowRule::lightcone : WindowRule::margin;
        ctx.window.margin = static_cast<std::int32_t>(cfg.integer("window_margin"));
        ctx.max_uncertified_fraction = cfg.real("max_uncertified");
    }
    return ctx;
}

// Cone from configured velocities, or from a velocity run on the same seed.
ConeSpec cone_of(const RunConfig& cfg, const InteractionKernel& kernel, const RunContext& ctx, nlohmann::json& info) {
    double alpha = 0.0, beta = 0.0;
    if (cfg.has("alpha_hat")) {
        alpha = cfg.real("alpha_hat");
        beta = cfg.real("beta_hat");
        info = {{"source", "config"}};
    } else {
        const auto est = estimate_velocities(kernel, cfg.real("velocity_horizon"), count_of(cfg, "velocity_replicates"), ctx);
        alpha = est.alpha_hat;
        beta = est.beta_hat;
        info = {{"source", "estimated"},
                {"alpha_ci", {est.alpha_ci.lo, est.alpha_ci.hi}},
                {"beta_ci", {est.beta_ci.lo, est.beta_ci.hi}},
                {"survivors", est.survivors}};
    }
    const double eps = cfg.has("eps") ? cfg.real("eps") : cfg.real("eps_fraction") * (alpha - beta);
    ConeSpec cone{alpha, beta, eps};
    cone.validate();
    return cone;
}

std::vector<double> sorted_copy(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

ExperimentReport simulate(const RunConfig& cfg, std::uint64_t seed) {
    const auto kernel = kernel_of(cfg);
    const double horizon = cfg.real("horizon");
    const auto window = SpaceTimeWindow::centered(static_cast<std::int32_t>(cfg.integer("half_width")), horizon);
    const EventLog log = generate_log(kernel, window, seed);
    const Configuration initial =
        cfg.text("initial") == "full" ? Configuration::full(window) : Configuration::from_sites(window, {0});
    const BoundaryPolicy boundary = cfg.text("boundary") == "frozen" ? BoundaryPolicy::frozen_occupied_outside
                                                                     : BoundaryPolicy::vacant_outside;
    const Trajectory traj = evolve(log, initial, boundary, horizon);
    ExperimentReport rep;
    rep.experiment = "simulate";
    rep.parameters = {{"window", {{"x_min", window.x_min}, {"x_max", window.x_max}, {"t_max", horizon}}},
                      {"events", log.size()},
                      {"log_fingerprint", log.fingerprint()}};
    rep.estimates = trajectory_summary(traj);
    rep.grid = trajectory_table(traj);
    rep.seeds.push_back({0, 0, seed});
    return rep;
}

ExperimentReport boxclear(const RunConfig& cfg, const InteractionKernel& kernel, const ConeSpec& cone,
                          const RunContext& ctx) {
    const int n0 = static_cast<int>(cfg.integer("n0"));
    ExperimentReport rep =
        boxclear_proof_check(kernel, cone, n0, cfg.real("horizon"), count_of(cfg, "replicates"), ctx);
    const int sites = cfg.has("v_sites") ? static_cast<int>(cfg.integer("v_sites"))
                                         : static_cast<int>(clearing_box(cone, n0).site_count());
    const ExperimentReport free_box = box_death_free_probability(sites, n0, count_of(cfg, "deathfree_replicates"), ctx);
    rep.estimates = {{"proof_check", rep.estimates}, {"death_free", free_box.estimates}};
    rep.parameters["death_free"] = free_box.parameters;
    for (const auto& v : free_box.verdicts) rep.verdicts.push_back(v);
    for (const auto& n : free_box.notes) rep.notes.push_back(n);
    rep.notes.push_back("death-free seeds follow replicate_seed(seed, \"deathfree\", 0, r)");
    return rep;
}

}  // namespace

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const RunConfig& config, const char* env_value) {
    if (flag) return *flag;
    if (auto s = config.seed()) return *s;
    if (env_value && *env_value) {
        const std::string text(env_value);
        std::uint64_t v = 0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
            throw ParameterError("CONECOUPLE_SEED must be an unsigned 64-bit integer, got '" + text + "'");
        }
        return v;
    }
    return default_master_seed;
}

ExperimentReport execute(const RunConfig& cfg, std::uint64_t seed, unsigned workers) {
    const std::string& exp = cfg.experiment();
    if (exp == "simulate") return simulate(cfg, seed);

    const RunContext ctx = context_of(cfg, seed, workers);
    if (exp == "percolation") {
        Eq3Params p;
        p.p_open = cfg.real("p_S");
        p.c = cfg.real("c");
        p.a = cfg.real("a");
        p.p_thin = cfg.real("p_thin");
        p.n_grid.clear();
        for (auto n : cfg.integers("n_grid")) p.n_grid.push_back(static_cast<int>(n));
        p.trials = count_of(cfg, "trials");
        p.source.half_width = static_cast<int>(cfg.integer("source_half_width"));
        p.placement = placement_from_string(cfg.text("placement"));
        return percolation_report(p, count_of(cfg, "check_trials"), ctx);
    }

    const InteractionKernel kernel = kernel_of(cfg);
    const std::uint64_t replicates = count_of(cfg, "replicates");
    if (exp == "velocities") {
        ExperimentReport rep;
        std::vector<SeedRecord> seeds;
        const auto est = estimate_velocities(kernel, cfg.real("horizon"), replicates, ctx, &seeds);
        rep = velocity_report(est, kernel);
        rep.seeds = std::move(seeds);
        return rep;
    }
    if (exp == "duality-check") {
        return duality_experiment(kernel, static_cast<std::int32_t>(cfg.integer("half_width")),
                                  cfg.real("max_half_time"), replicates, ctx);
    }
    if (exp == "extinction-tail") {
        return extinction_tail_experiment(kernel, cfg.reals("t_grid"), cfg.real("t_max"), replicates, ctx).report;
    }
    if (exp == "oracle-validate") {
        std::vector<int> sites;
        for (auto n : cfg.integers("n_sites")) sites.push_back(static_cast<int>(n));
        return oracle_validation(kernel, sites, cfg.reals("times"), replicates, ctx);
    }

    nlohmann::json cone_info;
    const ConeSpec cone = cone_of(cfg, kernel, ctx, cone_info);
    ExperimentReport rep;
    if (exp == "theorem1") {
        rep = theorem1_experiment(kernel, cone, sorted_copy(cfg.reals("horizons")), replicates, ctx);
    } else if (exp == "coupling-time") {
        rep = coupling_time_experiment(kernel, cone, cfg.real("horizon"), replicates, ctx);
    } else if (exp == "decay") {
        std::vector<SiteRule> rules;
        for (const auto& r : cfg.texts("x_rules")) rules.push_back(site_rule_from_string(r));
        rep = decay_experiment(kernel, cone, rules, cfg.reals("t_grid"), replicates, ctx).report;
    } else if (exp == "boxclear") {
        rep = boxclear(cfg, kernel, cone, ctx);
    } else {
        throw ParameterError("unknown experiment '" + exp + "'");
    }
    rep.parameters["cone_velocities"] = cone_info;
    return rep;
}

nlohmann::json report_document(const RunConfig& config, std::uint64_t seed, const ExperimentReport& report) {
    nlohmann::json doc = report.to_json();
    nlohmann::json cfg = config.to_json();
    cfg["seed"] = std::to_string(seed);
    doc["schema_version"] = schema_version;
    doc["config"] = cfg;
    return doc;
}

const std::vector<std::string>& output_files() {
    static const std::vector<std::string> files{"report.json", "grid.csv",  "summary.txt",
                                                "plot.dat",    "seeds.csv", "timing.json"};
    return files;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

void remove_outputs(const std::filesystem::path& dir) {
    std::error_code ec;
    for (const auto& f : output_files()) std::filesystem::remove(dir / f, ec);
}

}  // namespace

int run(const RunConfig& config, const RunOptions& options, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    try {
        const ExperimentReport report = execute(config, options.seed, options.workers);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::filesystem::create_directories(options.out_dir);
        const auto& dir = options.out_dir;
        write_file(dir / "report.json", report_document(config, options.seed, report).dump(2) + "\n");
        write_file(dir / "grid.csv", report.grid.to_csv());
        write_file(dir / "plot.dat", report.grid.to_plot_text());
        std::string summary = report.summary_text();
        summary += "seed: " + std::to_string(options.seed) + "\n";
        write_file(dir / "summary.txt", summary);
        std::string seeds = "grid_index,replicate,seed\n";
        for (const auto& s : report.seeds) {
            seeds += std::to_string(s.grid_index) + ',' + std::to_string(s.replicate) + ',' + std::to_string(s.seed) + '\n';
        }
        write_file(dir / "seeds.csv", seeds);
        write_file(dir / "timing.json", nlohmann::json{{"wall_seconds", seconds}, {"workers", options.workers}}.dump(2) + "\n");
        return report.passed() ? 0 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        remove_outputs(options.out_dir);
        return 1;
    }
}

}  // namespace conecouple
