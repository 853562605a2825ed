// Acceptance suite. `acceptance [N...]` runs the listed criteria (all when
// none are given) and prints one PASS/FAIL line per criterion. Exit status
// is nonzero when any criterion fails.

#include "conecouple/dual.hpp"
#include "conecouple/engine.hpp"
#include "conecouple/experiments.hpp"
#include "conecouple/graphical.hpp"
#include "conecouple/parallel.hpp"
#include "conecouple/random.hpp"
#include "conecouple/run.hpp"

#include "support.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace conecouple;

namespace {

// Pinned sizes and tolerances.
constexpr std::uint64_t master_seed = default_master_seed;
constexpr std::uint64_t oracle_replicates = 100000;
constexpr std::uint64_t property_cases = 10000;       // certified cases required per property
constexpr std::uint64_t property_attempts = 40000;    // upper bound on cases drawn
constexpr double velocity_horizon = 100.0;
constexpr std::uint64_t velocity_replicates = 2000;
constexpr double eps_fraction = 0.2;
constexpr std::uint64_t cone_replicates = 10200;
constexpr std::uint64_t cone_certified_required = 10000;
constexpr double cone_horizon = 40.0;
constexpr double theorem1_confidence = 0.99;
constexpr double tail_confidence = 0.95;
constexpr std::uint64_t decay_replicates = 100000;
constexpr double decay_confidence = 0.95;
constexpr int box_n0 = 5;
constexpr double box_horizon = 40.0;
constexpr std::uint64_t box_replicates = 45000;
constexpr std::uint64_t box_qualifying_required = 10000;
constexpr std::uint64_t deathfree_replicates = 1000000;
constexpr double void_check_n0 = 0.2;  // small enough that the void event is observable
constexpr std::uint64_t percolation_check_trials = 1000;
constexpr double symmetric_velocity_horizon = 200.0;

const InteractionKernel& default_kernel() {
    static const InteractionKernel k = InteractionKernel::uniform(1, 2.0);
    return k;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

RunContext context(double confidence) {
    RunContext ctx;
    ctx.seed = master_seed;
    ctx.confidence = confidence;
    return ctx;
}

std::string failed_verdicts(const ExperimentReport& rep) {
    std::string out;
    for (const auto& [name, ok] : rep.verdicts) {
        if (!ok) out += (out.empty() ? "" : ",") + name;
    }
    return out.empty() ? "none" : out;
}

ConeSpec estimated_cone() {
    const auto est = estimate_velocities(default_kernel(), velocity_horizon, velocity_replicates, context(0.99));
    return ConeSpec{est.alpha_hat, est.beta_hat, eps_fraction * (est.alpha_hat - est.beta_hat)};
}

std::string cone_text(const ConeSpec& c) {
    std::ostringstream s;
    s << "alpha_hat=" << c.alpha_hat << " beta_hat=" << c.beta_hat << " eps=" << c.eps;
    return s.str();
}

// ---------------------------------------------------------------- 1

Outcome criterion_oracle() {
    const auto rep = oracle_validation(default_kernel(), {1, 2, 3, 4}, {0.5, 1.0, 2.0}, oracle_replicates, context(0.99));
    double worst = 0.0;
    for (const auto& row : rep.grid.rows) worst = std::max(worst, row[2] / row[3]);
    std::ostringstream d;
    d << "worst tv/bound=" << worst << " failed=" << failed_verdicts(rep);
    return {rep.passed(), d.str()};
}

// ---------------------------------------------------------------- 2

Configuration random_central(const SpaceTimeWindow& w, SplitMix64& rng, std::int32_t reach, double density) {
    Configuration c(w);
    for (std::int32_t x = -reach; x <= reach; ++x) c.set(x, rng.uniform() < density);
    return c;
}

std::vector<double> event_times(const EventLog& log, double t_end) {
    std::vector<double> times{0.0};
    for (const Event& e : log.events()) {
        if (e.time <= t_end) times.push_back(e.time);
    }
    return times;
}

Configuration intersection(const Configuration& a, const Configuration& b) {
    Configuration c(SpaceTimeWindow{a.x_min(), a.x_max(), 0.0});
    for (std::int32_t x = a.x_min(); x <= a.x_max(); ++x) c.set(x, a.occupied(x) && b.occupied(x));
    return c;
}

bool untouched(const std::vector<Trajectory>& trajs) {
    for (const auto& t : trajs) {
        if (t.boundary_contact_time()) return false;
    }
    return true;
}

struct PropertyCase {
    bool certified = false;
    bool additive = true;
    bool monotone = true;
    bool restart = true;
};

PropertyCase property_case(std::uint64_t index) {
    static const InteractionKernel wide = InteractionKernel(2, {0.4, 0.9, 1.1, 0.6});
    const auto& kernel = index % 2 ? default_kernel() : wide;
    const auto seed = replicate_seed(master_seed, "acceptance-properties", 0, index);
    SplitMix64 rng(derive_seed(seed, {1}));
    constexpr double t_end = 4.0;
    const auto log = generate_log(kernel, SpaceTimeWindow::centered(40, t_end), seed);
    const auto& w = log.window();
    const auto a = random_central(w, rng, 6, 0.3);
    const auto b = random_central(w, rng, 6, 0.3);
    const auto ab = a.united(b);
    const std::vector<Configuration> inits{a, b, ab, intersection(a, b)};
    const std::vector<BoundaryPolicy> policies{BoundaryPolicy::vacant_outside};
    const auto trajs = coupled_evolve(log, inits, policies, t_end);

    PropertyCase out;
    out.certified = untouched(trajs);
    const auto times = event_times(log, t_end);
    const auto sa = testsupport::sweep(trajs[0], times);
    const auto sb = testsupport::sweep(trajs[1], times);
    const auto sab = testsupport::sweep(trajs[2], times);
    const auto sanb = testsupport::sweep(trajs[3], times);
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (std::size_t i = 0; i < w.site_count(); ++i) {
            if (sab[k][i] != (sa[k][i] | sb[k][i])) out.additive = false;
            if (sanb[k][i] > sa[k][i] || sa[k][i] > sab[k][i]) out.monotone = false;
        }
    }
    const double s = t_end * rng.uniform();
    const auto restarted = evolve(log, trajs[0].state_at(s), BoundaryPolicy::vacant_outside, s, t_end);
    for (double t : {s, 0.5 * (s + t_end), t_end}) {
        if (!(restarted.state_at(t) == trajs[0].state_at(t))) out.restart = false;
    }
    return out;
}

Outcome criterion_properties() {
    const auto cases = parallel_map(property_attempts, 0, property_case);
    std::uint64_t certified = 0, add_bad = 0, mono_bad = 0, restart_bad = 0;
    for (const auto& c : cases) {
        if (certified >= property_cases) break;
        if (!c.certified) continue;
        ++certified;
        add_bad += !c.additive;
        mono_bad += !c.monotone;
        restart_bad += !c.restart;
    }
    const auto dual = duality_experiment(default_kernel(), 30, 3.0, 12000, context(0.99));
    const auto dual_certified = dual.estimates.at("certified_cases").get<std::uint64_t>();
    const auto dual_failures = dual.estimates.at("failures").get<std::uint64_t>();
    std::ostringstream d;
    d << "certified=" << certified << " additivity_exceptions=" << add_bad << " monotonicity_exceptions=" << mono_bad
      << " restart_exceptions=" << restart_bad << " duality_certified=" << dual_certified
      << " duality_exceptions=" << dual_failures;
    const bool pass = certified >= property_cases && add_bad == 0 && mono_bad == 0 && restart_bad == 0 &&
                      dual_certified >= property_cases && dual_failures == 0;
    return {pass, d.str()};
}

// ---------------------------------------------------------------- 3, 4

struct ConeRun {
    ConeSpec cone;
    std::vector<ConeReplicate> reps;
};

const ConeRun& cone_run() {
    static const ConeRun run = [] {
        ConeRun r;
        r.cone = estimated_cone();
        r.reps = run_cone_replicates(default_kernel(), r.cone, cone_horizon, cone_replicates, context(0.99));
        return r;
    }();
    return run;
}

Outcome criterion_theorem1() {
    const auto& run = cone_run();
    const auto rep = theorem1_report(run.reps, {10.0, 20.0, cone_horizon}, context(theorem1_confidence));
    const auto certified = rep.certificates.at("certified").get<std::uint64_t>();
    const auto& rows = rep.grid.rows;
    std::ostringstream d;
    d << cone_text(run.cone) << " certified=" << certified << " p10=" << rows[0][3] << " p20=" << rows[1][3]
      << " p40=" << rows[2][3] << " wilson99_lo40=" << rows[2][4] << " failed=" << failed_verdicts(rep);
    return {rep.passed() && certified >= cone_certified_required, d.str()};
}

Outcome criterion_coupling_time() {
    const auto& run = cone_run();
    const auto rep = coupling_time_report(run.reps, cone_horizon, context(tail_confidence));
    const auto& e = rep.estimates;
    std::ostringstream d;
    d << "survivors=" << e.at("survivors") << " beyond_T/4=" << e.at("beyond_quarter")
      << " beyond_T/2=" << e.at("beyond_half");
    if (e.contains("half_over_quarter")) {
        d << " ratio=" << e["half_over_quarter"]["estimate"] << " upper95=" << e["half_over_quarter"]["ci_hi"]
          << " (needs < 0.5)";
    }
    return {rep.passed(), d.str()};
}

// ---------------------------------------------------------------- 5

Outcome criterion_decay() {
    const auto cone = estimated_cone();
    const auto res = decay_experiment(default_kernel(), cone, {SiteRule::zero, SiteRule::left, SiteRule::right},
                                      {5.0, 10.0, 15.0, 20.0}, decay_replicates, context(decay_confidence));
    std::ostringstream d;
    d << cone_text(cone);
    for (const auto& s : res.series) {
        d << " eq" << s.equation << "_" << to_string(s.rule) << "=";
        if (s.fit.fitted) {
            d << s.fit.slope << "[" << s.fit.slope_ci.lo << "," << s.fit.slope_ci.hi << "]";
        } else {
            d << "unfitted";
        }
    }
    d << " implication_exceptions=" << res.implication_exceptions << " failed=" << failed_verdicts(res.report);
    return {res.report.passed(), d.str()};
}

// ---------------------------------------------------------------- 6, 7

Outcome criterion_boxclear() {
    const auto cone = estimated_cone();
    RunContext ctx = context(0.99);
    const auto rep = boxclear_proof_check(default_kernel(), cone, box_n0, box_horizon, box_replicates, ctx);
    const auto qualifying = rep.estimates.at("qualifying").get<std::uint64_t>();
    const auto counter = rep.estimates.at("counterexamples").get<std::uint64_t>();
    std::ostringstream d;
    d << cone_text(cone) << " qualifying=" << qualifying << " counterexamples=" << counter;
    return {qualifying >= box_qualifying_required && counter == 0, d.str()};
}

Outcome criterion_deathfree() {
    const auto cone = estimated_cone();
    const int sites = static_cast<int>(clearing_box(cone, box_n0).site_count());
    const auto main = box_death_free_probability(sites, box_n0, deathfree_replicates, context(0.99));
    const auto voids = box_death_free_probability(sites, void_check_n0, deathfree_replicates, context(0.99));
    const auto& m = main.estimates;
    const auto& v = voids.estimates;
    std::ostringstream d;
    d << "V_sites=" << sites << " mean=" << m.at("death_count_mean") << " expected=" << m.at("death_count_expected")
      << " sigma=" << m.at("death_count_mean_sigma") << " void_at_n0=" << void_check_n0 << ": "
      << v.at("void_frequency") << " vs " << v.at("void_expected") << " failed=" << failed_verdicts(main) << ","
      << failed_verdicts(voids);
    const bool void_checked = std::any_of(voids.verdicts.begin(), voids.verdicts.end(),
                                          [](const auto& p) { return p.first == "void_frequency_within_3sigma"; });
    return {main.passed() && voids.passed() && void_checked, d.str()};
}

// ---------------------------------------------------------------- 8

Outcome criterion_percolation() {
    Eq3Params params;
    params.p_open = 0.95;
    params.c = 0.5;
    params.a = 0.5;
    params.p_thin = 0.3;
    params.n_grid = {10, 20, 30, 40, 50, 60};
    params.trials = 100000;
    const auto rep = percolation_report(params, percolation_check_trials, context(0.95));
    std::ostringstream d;
    const auto& fit = rep.estimates.at("fit");
    d << "slope=" << fit.value("log_slope", 0.0) << " ci=" << fit.value("log_slope_ci", nlohmann::json::array())
      << " failed=" << failed_verdicts(rep);
    return {rep.passed(), d.str()};
}

// ---------------------------------------------------------------- 9

Outcome criterion_velocity() {
    const auto est = estimate_velocities(default_kernel(), symmetric_velocity_horizon, velocity_replicates, context(0.99));
    const auto rep = velocity_report(est, default_kernel());
    std::ostringstream d;
    d << "alpha=" << est.alpha_hat << "[" << est.alpha_ci.lo << "," << est.alpha_ci.hi << "] -beta=" << -est.beta_hat
      << "[" << -est.beta_ci.hi << "," << -est.beta_ci.lo << "] survival_lo99=" << est.survival.ci.lo
      << " failed=" << failed_verdicts(rep);
    const bool overlap_checked = std::any_of(rep.verdicts.begin(), rep.verdicts.end(),
                                             [](const auto& p) { return p.first == "alpha_and_minus_beta_overlap"; });
    return {rep.passed() && overlap_checked, d.str()};
}

// ---------------------------------------------------------------- 10

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome criterion_determinism() {
    const std::vector<std::pair<std::string, std::string>> configs{
        {"oracle", "experiment = oracle-validate\nM = 1\nmu = 2,2\nreplicates = 20000\n"},
        {"theorem1", "experiment = theorem1\nM = 1\nmu = 2,2\nvelocity_replicates = 200\nvelocity_horizon = 50\n"
                     "replicates = 500\nhorizons = 5,10,20\n"},
        {"decay", "experiment = decay\nM = 1\nmu = 2,2\nalpha_hat = 0.8\nbeta_hat = -0.8\nreplicates = 500\n"},
        {"percolation", "experiment = percolation\ntrials = 2000\ncheck_trials = 100\n"},
    };
    const auto root = std::filesystem::temp_directory_path() / "conecouple_acceptance_determinism";
    std::filesystem::remove_all(root);
    bool pass = true;
    std::string detail;
    for (const auto& [name, text] : configs) {
        const auto parsed = parse_config(text);
        if (!parsed.ok()) return {false, name + ": " + parsed.errors.front().message};
        std::ostringstream err;
        const auto a = root / (name + "_a");
        const auto b = root / (name + "_b");
        const int ca = run(*parsed.config, {a, master_seed, 1}, err);
        const int cb = run(*parsed.config, {b, master_seed, 0}, err);
        const bool same = ca != 1 && cb != 1 && slurp(a / "report.json") == slurp(b / "report.json") &&
                          slurp(a / "grid.csv") == slurp(b / "grid.csv");
        pass = pass && same;
        detail += (detail.empty() ? "" : " ") + name + "=" + (same ? "identical" : "DIFFERENT");
    }
    std::filesystem::remove_all(root);
    return {pass, detail};
}

const std::map<int, std::function<Outcome()>>& criteria() {
    static const std::map<int, std::function<Outcome()>> c{
        {1, criterion_oracle},      {2, criterion_properties},  {3, criterion_theorem1},   {4, criterion_coupling_time},
        {5, criterion_decay},       {6, criterion_boxclear},    {7, criterion_deathfree},  {8, criterion_percolation},
        {9, criterion_velocity},    {10, criterion_determinism},
    };
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (!criteria().count(n)) {
            std::cerr << "unknown criterion '" << argv[i] << "'\n";
            return 64;
        }
        selected.push_back(n);
    }
    if (selected.empty()) {
        for (const auto& [n, fn] : criteria()) selected.push_back(n);
    }
    bool all = true;
    for (int n : selected) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria().at(n)();
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << "criterion " << n << ": " << (out.pass ? "PASS" : "FAIL") << " (" << secs << " s) " << out.detail
                  << std::endl;
        all = all && out.pass;
    }
    return all ? 0 : 1;
}
