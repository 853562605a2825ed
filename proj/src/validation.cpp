#include "conecouple/error.hpp"
#include "conecouple/experiments.hpp"
#include "conecouple/oracle.hpp"
#include "conecouple/parallel.hpp"
#include "conecouple/random.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace conecouple {

ExperimentReport duality_experiment(const InteractionKernel& kernel, std::int32_t half_width, double max_half_time,
                                    std::uint64_t cases, const RunContext& ctx) {
    if (cases == 0) throw ParameterError("replicates must be > 0");
    if (half_width < 3 * (kernel.range() + 1)) throw ParameterError("duality window too narrow for the kernel range");
    if (!(max_half_time > 0.0) || !std::isfinite(max_half_time)) throw ParameterError("max half time must be > 0");
    const std::int32_t reach = half_width / 3;
    struct Case {
        bool certified = false;
        bool holds = true;
        bool forward_hit = false;
    };
    const auto results = parallel_map(cases, ctx.workers, [&](std::size_t i) {
        const auto seed = replicate_seed(ctx.seed, "duality", 0, i);
        const double t = max_half_time * keyed_uniform(seed, {1});
        const auto window = SpaceTimeWindow::centered(half_width, 2.0 * t);
        const EventLog log = generate_log(kernel, window, derive_seed(seed, {0}));
        std::vector<std::int32_t> sites;
        for (std::int32_t x = -reach; x <= reach; ++x) {
            if (keyed_uniform(seed, {2, key_of(x)}) < 0.3) sites.push_back(x);
        }
        const auto x = static_cast<std::int32_t>(-reach + static_cast<std::int32_t>(keyed_uniform(seed, {3}) * (2 * reach + 1)));
        const auto res = duality_check(log, Configuration::from_sites(window, sites), DualSpec{x, t});
        return Case{res.certified, res.holds, res.forward_hit};
    });
    std::uint64_t certified = 0, failures = 0, failures_uncertified = 0, hits = 0;
    nlohmann::json failing = nlohmann::json::array();
    ExperimentReport rep;
    rep.experiment = "duality-check";
    for (std::uint64_t i = 0; i < cases; ++i) {
        const auto& c = results[i];
        rep.seeds.push_back({0, i, replicate_seed(ctx.seed, "duality", 0, i)});
        if (!c.certified) {
            failures_uncertified += !c.holds;
            continue;
        }
        ++certified;
        hits += c.forward_hit;
        if (!c.holds) {
            ++failures;
            failing.push_back({{"case", i}, {"seed", replicate_seed(ctx.seed, "duality", 0, i)}});
        }
    }
    rep.parameters = {{"kernel", {{"M", kernel.range()}, {"mu", kernel.rates()}}},
                      {"half_width", half_width},
                      {"max_half_time", max_half_time},
                      {"replicates", cases}};
    rep.estimates = {{"certified_cases", certified},
                     {"forward_hits", hits},
                     {"failures", failures},
                     {"failing_cases", failing},
                     {"failures_uncertified", failures_uncertified}};
    rep.certificates = {{"certified", certified}, {"uncertified", cases - certified}};
    rep.verdicts.emplace_back("some_case_certified", certified > 0);
    rep.verdicts.emplace_back("zero_failures_on_certified", failures == 0);
    rep.grid.columns = {"cases", "certified", "forward_hits", "failures"};
    rep.grid.rows.push_back({static_cast<double>(cases), static_cast<double>(certified), static_cast<double>(hits),
                             static_cast<double>(failures)});
    return rep;
}

ExperimentReport oracle_validation(const InteractionKernel& kernel, const std::vector<int>& site_counts,
                                   const std::vector<double>& times, std::uint64_t replicates,
                                   const RunContext& ctx) {
    if (replicates == 0) throw ParameterError("replicates must be > 0");
    if (site_counts.empty() || times.empty()) throw ParameterError("oracle validation needs sites and times");
    ExperimentReport rep;
    rep.experiment = "oracle-validate";
    rep.grid.columns = {"n", "t", "tv_distance", "tv_bound", "extinction_exact", "extinction_simulated"};
    nlohmann::json cells = nlohmann::json::array();
    bool all_within = true;
    std::uint64_t grid_index = 0;
    for (int n : site_counts) {
        const GeneratorMatrix q = build_generator(kernel, n, BoundaryPolicy::vacant_outside);
        const std::int32_t start_site = n / 2;
        for (double t : times) {
            if (!(t >= 0.0)) throw ParameterError("oracle times must be >= 0");
            const auto window = oracle_window(n, t);
            const Configuration start = Configuration::from_sites(window, {start_site});
            const auto exact = transient_distribution(q, start, t);
            const auto gi = grid_index++;
            const auto states = parallel_map(replicates, ctx.workers, [&](std::size_t r) {
                const EventLog log = generate_log(kernel, window, replicate_seed(ctx.seed, "oracle", gi, r));
                return state_index(evolve(log, start, BoundaryPolicy::vacant_outside, t).final_state());
            });
            std::vector<std::uint64_t> hist(q.state_count(), 0);
            for (auto s : states) ++hist[s];
            const double nrep = static_cast<double>(replicates);
            double tv = 0.0, bound = 0.0;
            for (std::size_t s = 0; s < hist.size(); ++s) {
                const double p = exact[s];
                tv += std::abs(static_cast<double>(hist[s]) / nrep - p);
                bound += 3.0 * std::sqrt(std::max(0.0, p * (1.0 - p)) / nrep);
            }
            tv *= 0.5;
            bound *= 0.5;
            all_within = all_within && tv < bound;
            const double ext_sim = static_cast<double>(hist[0]) / nrep;
            cells.push_back({{"n", n},
                             {"t", t},
                             {"tv", tv},
                             {"bound", bound},
                             {"exact", exact},
                             {"extinction_exact", exact[0]},
                             {"extinction_simulated", ext_sim}});
            rep.grid.rows.push_back({static_cast<double>(n), t, tv, bound, exact[0], ext_sim});
            if (n == 1) {
                const double p = std::exp(-t);
                const double freq = static_cast<double>(hist[1]) / nrep;
                const double sigma = std::sqrt(p * (1.0 - p) / nrep);
                std::ostringstream name;
                name << "single_site_anchor_t" << t;
                rep.verdicts.emplace_back(name.str(), std::abs(freq - p) <= 3.0 * sigma);
            }
        }
    }
    rep.verdicts.emplace(rep.verdicts.begin(), "tv_below_3sigma_bound", all_within);
    rep.parameters = {{"kernel", {{"M", kernel.range()}, {"mu", kernel.rates()}}},
                      {"n_sites", site_counts},
                      {"times", times},
                      {"replicates", replicates},
                      {"boundary", "vacant_outside"},
                      {"start", "middle site n/2"}};
    rep.estimates = {{"cells", cells}};
    rep.notes.push_back("tv_bound = 0.5 * sum over states of 3 * sqrt(p (1 - p) / N)");
    for (std::uint64_t g = 0; g < grid_index; ++g) {
        for (std::uint64_t r = 0; r < replicates; ++r) rep.seeds.push_back({g, r, replicate_seed(ctx.seed, "oracle", g, r)});
    }
    return rep;
}

ExperimentReport percolation_report(const Eq3Params& params, std::uint64_t check_trials, const RunContext& ctx) {
    params.validate();
    const DecayFit fit = eq3_experiment(params, ctx.seed, ctx.workers, 0.95);
    const int depth = *std::max_element(params.n_grid.begin(), params.n_grid.end());

    // Exact coupled checks on shared uniforms.
    struct Check {
        bool ps_monotone = true;
        bool thinning_monotone = true;
        bool full_cone = true;
    };
    const auto checks = parallel_map(check_trials, ctx.workers, [&](std::size_t i) {
        Check c;
        const auto seed = replicate_seed(ctx.seed, "percolation-check", 0, i);
        bool prev = false;
        for (double p : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0}) {
            const auto wet = final_wet_level(OrientedLattice{p, depth, seed}, params.source);
            const bool alive = std::any_of(wet.begin(), wet.end(), [](std::uint8_t v) { return v != 0; });
            if (prev && !alive) c.ps_monotone = false;
            prev = alive;
        }
        const auto full = simulate_wet(OrientedLattice{1.0, depth, seed});
        for (int n = 0; n <= depth && c.full_cone; ++n) {
            const auto& lv = full.level(n);
            if (lv.size() != static_cast<std::size_t>(n) + 1) c.full_cone = false;
            for (std::size_t k = 0; k < lv.size() && c.full_cone; ++k) {
                if (lv[k] != -n + 2 * static_cast<int>(k)) c.full_cone = false;
            }
        }
        const int n = params.n_grid.front();
        const auto s = eq3_seeds(seed, n, i);
        const auto points = place_points(n, params.c, params.a, params.placement);
        const OrientedLattice k{params.p_open, n, s.lattice};
        const OrientedLattice kt{params.p_open, n, s.lattice_tilde};
        bool prev_event = true;
        for (double pt : {0.1, 0.3, 0.5, 0.7, 1.0}) {
            const bool event = eq3_trial(k, kt, points, points, pt, s.thinning, params.source).event();
            if (event && !prev_event) c.thinning_monotone = false;
            prev_event = event;
        }
        return c;
    });
    std::uint64_t ps_bad = 0, thin_bad = 0, cone_bad = 0;
    for (const auto& c : checks) {
        ps_bad += !c.ps_monotone;
        thin_bad += !c.thinning_monotone;
        cone_bad += !c.full_cone;
    }

    ExperimentReport rep;
    rep.experiment = "percolation";
    rep.parameters = {{"p_S", params.p_open},
                      {"c", params.c},
                      {"a", params.a},
                      {"p_thin", params.p_thin},
                      {"n_grid", params.n_grid},
                      {"trials", params.trials},
                      {"source_half_width", params.source.half_width},
                      {"placement", to_string(params.placement)},
                      {"check_trials", check_trials}};
    rep.estimates = {{"fit", to_json(fit)},
                     {"ps_monotonicity_violations", ps_bad},
                     {"thinning_monotonicity_violations", thin_bad},
                     {"full_cone_violations", cone_bad}};
    rep.verdicts.emplace_back("eq3_slope_negative", fit.decays());
    rep.verdicts.emplace_back("ps_monotone_exact", ps_bad == 0);
    rep.verdicts.emplace_back("thinning_monotone_exact", thin_bad == 0);
    rep.verdicts.emplace_back("full_cone_at_ps_1", cone_bad == 0);
    for (double d : fit.dropped) rep.notes.push_back("zero count at n = " + std::to_string(d) + ", dropped");
    rep.grid.columns = {"n", "count", "trials", "estimate", "stderr"};
    for (std::size_t gi = 0; gi < fit.grid.size(); ++gi) {
        const auto& pt = fit.grid[gi];
        rep.grid.rows.push_back({pt.t, static_cast<double>(pt.count), static_cast<double>(pt.trials), pt.estimate,
                                 pt.stderr_});
    }
    rep.notes.push_back("trial seeds: eq3_seeds(seed, n, trial) for trial < trials");
    for (std::size_t gi = 0; gi < params.n_grid.size(); ++gi) {
        for (std::uint64_t t = 0; t < params.trials; ++t) {
            rep.seeds.push_back({gi, t, eq3_seeds(ctx.seed, params.n_grid[gi], t).lattice});
        }
    }
    return rep;
}

}  // namespace conecouple
