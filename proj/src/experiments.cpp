#include "conecouple/experiments.hpp"

#include "conecouple/error.hpp"
#include "conecouple/parallel.hpp"
#include "conecouple/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace conecouple {

namespace {

constexpr double infinity = std::numeric_limits<double>::infinity();

bool contact_by(const Trajectory& traj, double t) {
    return traj.boundary_contact_time() && *traj.boundary_contact_time() <= t;
}

nlohmann::json kernel_json(const InteractionKernel& kernel) {
    return {{"M", kernel.range()}, {"mu", kernel.rates()}};
}

nlohmann::json cone_json(const ConeSpec& cone) {
    return {{"alpha_hat", cone.alpha_hat}, {"beta_hat", cone.beta_hat}, {"eps", cone.eps}};
}

nlohmann::json window_json(const WindowOptions& w) {
    return {{"rule", to_string(w.rule)}, {"margin", w.margin}};
}

void check_replicates(std::uint64_t replicates) {
    if (replicates == 0) throw ParameterError("replicates must be > 0");
}

void check_certified_fraction(std::uint64_t certified, std::uint64_t total, const RunContext& ctx) {
    const double failed = 1.0 - static_cast<double>(certified) / static_cast<double>(total);
    if (failed > ctx.max_uncertified_fraction) {
        std::ostringstream msg;
        msg << "truncation certificate failed on " << failed * 100.0 << "% of runs (threshold "
            << ctx.max_uncertified_fraction * 100.0 << "%); enlarge the window (window_margin or window_rule)";
        throw EstimationError(msg.str());
    }
}

nlohmann::json certificate_json(std::uint64_t certified, std::uint64_t total) {
    return {{"certified", certified},
            {"uncertified", total - certified},
            {"certified_fraction", static_cast<double>(certified) / static_cast<double>(total)},
            {"method", "vacant-outside / frozen-occupied-outside sandwich agreement on the cone; finite starts "
                       "must stay more than M sites from the window edge"}};
}

}  // namespace

// ---------------------------------------------------------------- single site

OriginRun run_from_origin(const InteractionKernel& kernel, std::uint64_t seed, double horizon,
                          std::int32_t initial_half_width) {
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon must be finite and >= 0");
    std::int32_t w = std::max(initial_half_width, kernel.range() + 1);
    double h = std::min(horizon, 8.0);
    for (;;) {
        const auto window = SpaceTimeWindow::centered(w, h);
        const EventLog log = generate_log(kernel, window, seed);
        Trajectory traj = evolve(log, Configuration::from_sites(window, {0}), BoundaryPolicy::vacant_outside, h);
        if (traj.boundary_contact_time()) {
            if (w > (1 << 24)) throw CapacityError("single-site run outgrew the largest window");
            w *= 2;
            continue;
        }
        const bool alive = !traj.final_state().is_empty();
        if (!alive || h >= horizon) return OriginRun{std::move(traj), horizon, alive, w};
        h = std::min(horizon, 2.0 * h);
    }
}

VelocityEstimate estimate_velocities(const InteractionKernel& kernel, double horizon, std::uint64_t replicates,
                                     const RunContext& ctx, std::vector<SeedRecord>* seeds) {
    check_replicates(replicates);
    if (!(horizon > 0.0)) throw ParameterError("velocity horizon must be > 0");
    struct Rep {
        bool alive = false;
        double right = 0.0;
        double left = 0.0;
    };
    const auto reps = parallel_map(replicates, ctx.workers, [&](std::size_t i) {
        const auto run = run_from_origin(kernel, replicate_seed(ctx.seed, "velocity", 0, i), horizon);
        Rep r;
        r.alive = run.survived;
        if (r.alive) {
            r.right = *run.trajectory.final_state().rightmost() / horizon;
            r.left = *run.trajectory.final_state().leftmost() / horizon;
        }
        return r;
    });
    if (seeds) {
        for (std::uint64_t i = 0; i < replicates; ++i) {
            seeds->push_back({0, i, replicate_seed(ctx.seed, "velocity", 0, i)});
        }
    }
    std::vector<double> rights, lefts;
    for (const auto& r : reps) {
        if (!r.alive) continue;
        rights.push_back(r.right);
        lefts.push_back(r.left);
    }
    VelocityEstimate est;
    est.horizon = horizon;
    est.replicates = replicates;
    est.survivors = rights.size();
    est.survival = wilson_interval(est.survivors, replicates, ctx.confidence);
    if (rights.empty()) {
        throw EstimationError("no run survived to T = " + std::to_string(horizon) + " out of " +
                              std::to_string(replicates) + "; the kernel may be subcritical");
    }
    constexpr std::size_t resamples = 2000;
    est.alpha_hat = mean_of(rights);
    est.beta_hat = mean_of(lefts);
    est.alpha_ci = bootstrap_mean_ci(rights, ctx.confidence, resamples, replicate_seed(ctx.seed, "velocity-boot", 0, 0));
    est.beta_ci = bootstrap_mean_ci(lefts, ctx.confidence, resamples, replicate_seed(ctx.seed, "velocity-boot", 1, 0));
    return est;
}

ExperimentReport velocity_report(const VelocityEstimate& est, const InteractionKernel& kernel) {
    ExperimentReport rep;
    rep.experiment = "velocities";
    rep.parameters = {{"kernel", kernel_json(kernel)}, {"horizon", est.horizon}, {"replicates", est.replicates}};
    rep.estimates = {{"alpha_hat", est.alpha_hat},
                     {"alpha_ci", {est.alpha_ci.lo, est.alpha_ci.hi}},
                     {"beta_hat", est.beta_hat},
                     {"beta_ci", {est.beta_ci.lo, est.beta_ci.hi}},
                     {"survivors", est.survivors},
                     {"survival", to_json(est.survival)}};
    rep.verdicts.emplace_back("survival_lower_bound_positive", est.survival.ci.lo > 0.0);
    if (kernel == kernel.mirrored()) {
        const Interval neg_beta{-est.beta_ci.hi, -est.beta_ci.lo};
        rep.verdicts.emplace_back("alpha_and_minus_beta_overlap", est.alpha_ci.overlaps(neg_beta));
    }
    rep.grid.columns = {"horizon", "replicates", "survivors", "alpha_hat", "alpha_lo", "alpha_hi", "beta_hat",
                        "beta_lo", "beta_hi"};
    rep.grid.rows.push_back({est.horizon, static_cast<double>(est.replicates), static_cast<double>(est.survivors),
                             est.alpha_hat, est.alpha_ci.lo, est.alpha_ci.hi, est.beta_hat, est.beta_ci.lo,
                             est.beta_ci.hi});
    return rep;
}

// ---------------------------------------------------------------- cone runs

ConeReplicate run_cone_replicate(const InteractionKernel& kernel, const ConeSpec& cone, double horizon,
                                 std::uint64_t seed, const WindowOptions& window) {
    const auto win = SpaceTimeWindow::centered(window.half_width(kernel, cone, horizon), horizon);
    const EventLog log = generate_log(kernel, win, seed);
    const Sandwich sandwich = full_start_sandwich(log, cone, horizon);
    const Trajectory origin =
        evolve(log, Configuration::from_sites(win, {0}), BoundaryPolicy::vacant_outside, horizon);

    ConeReplicate rep;
    rep.seed = seed;
    rep.horizon = horizon;
    rep.agreement = agreement_on_cone(origin, sandwich.lower, cone, horizon);
    if (sandwich.agreement.first_disagreement_time) rep.uncertified_from = *sandwich.agreement.first_disagreement_time;
    if (origin.boundary_contact_time()) {
        rep.uncertified_from = std::min(rep.uncertified_from, *origin.boundary_contact_time());
    }
    rep.o_extinction = origin.extinction_time();
    return rep;
}

std::vector<ConeReplicate> run_cone_replicates(const InteractionKernel& kernel, const ConeSpec& cone, double horizon,
                                               std::uint64_t replicates, const RunContext& ctx) {
    cone.validate();
    check_replicates(replicates);
    if (!(horizon > 0.0)) throw ParameterError("horizon must be > 0");
    return parallel_map(replicates, ctx.workers, [&](std::size_t i) {
        return run_cone_replicate(kernel, cone, horizon, replicate_seed(ctx.seed, cone_stream, 0, i), ctx.window);
    });
}

namespace {

std::vector<SeedRecord> cone_seeds(const std::vector<ConeReplicate>& reps) {
    std::vector<SeedRecord> out;
    out.reserve(reps.size());
    for (std::size_t i = 0; i < reps.size(); ++i) out.push_back({0, i, reps[i].seed});
    return out;
}

}  // namespace

ExperimentReport theorem1_report(const std::vector<ConeReplicate>& reps, const std::vector<double>& horizons,
                                 const RunContext& ctx) {
    if (reps.empty()) throw ParameterError("replicates must be > 0");
    if (horizons.empty()) throw ParameterError("horizons list is empty");
    std::vector<double> ts = horizons;
    std::sort(ts.begin(), ts.end());
    const double t_max = ts.back();
    if (!(ts.front() > 0.0)) throw ParameterError("horizons must be > 0");
    if (t_max > reps.front().horizon) throw ParameterError("horizon beyond the replicates' horizon");

    const auto certified = static_cast<std::uint64_t>(
        std::count_if(reps.begin(), reps.end(), [&](const ConeReplicate& r) { return r.certified_through(t_max); }));
    check_certified_fraction(certified, reps.size(), ctx);

    ExperimentReport rep;
    rep.experiment = "theorem1";
    rep.certificates = certificate_json(certified, reps.size());
    rep.grid.columns = {"T", "certified", "agree", "p_hat", "wilson_lo", "wilson_hi"};
    std::vector<Proportion> props;
    nlohmann::json per_t = nlohmann::json::array();
    for (double t : ts) {
        const auto agree = static_cast<std::uint64_t>(std::count_if(reps.begin(), reps.end(), [&](const auto& r) {
            return r.certified_through(t_max) && r.agreement.agrees_through(t);
        }));
        props.push_back(wilson_interval(agree, certified, ctx.confidence));
        const auto& p = props.back();
        per_t.push_back({{"T", t}, {"p_hat", to_json(p)}});
        rep.grid.rows.push_back({t, static_cast<double>(certified), static_cast<double>(agree), p.estimate, p.ci.lo,
                                 p.ci.hi});
    }
    nlohmann::json diffs = nlohmann::json::array();
    for (std::size_t i = 0; i + 1 < props.size(); ++i) {
        diffs.push_back({{"T", ts[i]}, {"T_next", ts[i + 1]}, {"difference", props[i].estimate - props[i + 1].estimate}});
    }
    rep.estimates = {{"per_horizon", per_t}, {"differences", diffs}};

    rep.verdicts.emplace_back("positive_at_largest_T", props.back().ci.lo > 0.0);
    for (std::size_t i = 0; i + 2 < props.size(); ++i) {
        const double early = props[i].estimate - props[i + 1].estimate;
        const double late = props[i + 1].estimate - props[i + 2].estimate;
        std::ostringstream name;
        name << "stabilizing_" << ts[i] << "_" << ts[i + 1] << "_" << ts[i + 2];
        rep.verdicts.emplace_back(name.str(), late < early);
    }
    rep.notes.push_back("xi^Z is the vacant-outside truncation of the full start, exact on the cone where the "
                        "sandwich certificate holds");
    rep.seeds = cone_seeds(reps);
    return rep;
}

ExperimentReport coupling_time_report(const std::vector<ConeReplicate>& reps, double horizon, const RunContext& ctx) {
    if (reps.empty()) throw ParameterError("replicates must be > 0");
    if (horizon != reps.front().horizon) throw ParameterError("coupling time needs replicates run to exactly T");
    const auto certified = static_cast<std::uint64_t>(
        std::count_if(reps.begin(), reps.end(), [&](const ConeReplicate& r) { return r.certified_through(horizon); }));
    check_certified_fraction(certified, reps.size(), ctx);

    std::vector<double> last;
    for (const auto& r : reps) {
        if (r.certified_through(horizon) && r.o_alive_at(horizon)) {
            last.push_back(r.agreement.last_disagreement_time.value_or(0.0));
        }
    }
    ExperimentReport rep;
    rep.experiment = "coupling-time";
    rep.certificates = certificate_json(certified, reps.size());
    rep.seeds = cone_seeds(reps);
    if (last.empty()) throw EstimationError("no certified run has xi^O alive at T");

    const auto survivors = static_cast<std::uint64_t>(last.size());
    auto beyond = [&](double s) {
        return static_cast<std::uint64_t>(std::count_if(last.begin(), last.end(), [s](double v) { return v > s; }));
    };
    constexpr int buckets = 8;
    std::vector<DecayPoint> tail;
    rep.grid.columns = {"s", "count_beyond", "survivors", "frequency", "stderr"};
    for (int k = 0; k < buckets; ++k) {
        const double s = horizon * k / buckets;
        tail.push_back(decay_point(s, beyond(s), survivors));
        rep.grid.rows.push_back({s, static_cast<double>(tail.back().count), static_cast<double>(survivors),
                                 tail.back().estimate, tail.back().stderr_});
    }
    const DecayFit fit = fit_log_linear(tail, 0.95);

    const auto n_quarter = beyond(horizon / 4.0);
    const auto n_half = beyond(horizon / 2.0);
    const auto zero_mass = static_cast<std::uint64_t>(std::count(last.begin(), last.end(), 0.0));
    rep.estimates = {{"survivors", survivors},
                     {"agree_from_start", zero_mass},
                     {"beyond_quarter", n_quarter},
                     {"beyond_half", n_half},
                     {"tail_fit", to_json(fit)}};
    if (n_quarter > 0) {
        // Two-sided 90% Wilson = one-sided 95% upper bound.
        const auto ratio = wilson_interval(n_half, n_quarter, 0.90);
        rep.estimates["half_over_quarter"] = to_json(ratio);
        rep.verdicts.emplace_back("tail_halves_from_T4_to_T2", ratio.ci.hi < 0.5);
    } else {
        rep.notes.push_back("no surviving run disagrees beyond T/4; the tail ratio is vacuous");
        rep.verdicts.emplace_back("tail_halves_from_T4_to_T2", true);
    }
    return rep;
}

ExperimentReport theorem1_experiment(const InteractionKernel& kernel, const ConeSpec& cone,
                                     const std::vector<double>& horizons, std::uint64_t replicates,
                                     const RunContext& ctx) {
    if (horizons.empty()) throw ParameterError("horizons list is empty");
    const double t_max = *std::max_element(horizons.begin(), horizons.end());
    auto rep = theorem1_report(run_cone_replicates(kernel, cone, t_max, replicates, ctx), horizons, ctx);
    rep.parameters = {{"kernel", kernel_json(kernel)}, {"cone", cone_json(cone)}, {"horizons", horizons},
                      {"replicates", replicates},      {"window", window_json(ctx.window)}};
    return rep;
}

ExperimentReport coupling_time_experiment(const InteractionKernel& kernel, const ConeSpec& cone, double horizon,
                                          std::uint64_t replicates, const RunContext& ctx) {
    auto rep = coupling_time_report(run_cone_replicates(kernel, cone, horizon, replicates, ctx), horizon, ctx);
    rep.parameters = {{"kernel", kernel_json(kernel)}, {"cone", cone_json(cone)}, {"horizon", horizon},
                      {"replicates", replicates},      {"window", window_json(ctx.window)}};
    return rep;
}

// ---------------------------------------------------------------- decay

const char* to_string(SiteRule rule) noexcept {
    switch (rule) {
        case SiteRule::zero: return "zero";
        case SiteRule::left: return "left";
        case SiteRule::right: return "right";
    }
    return "?";
}

SiteRule site_rule_from_string(const std::string& name) {
    for (SiteRule r : {SiteRule::zero, SiteRule::left, SiteRule::right}) {
        if (name == to_string(r)) return r;
    }
    throw ParameterError("unknown site rule '" + name + "' (expected zero, left or right)");
}

std::optional<std::int32_t> choose_site(SiteRule rule, const ConeSpec& cone, double t) {
    const IntegerInterval cone_sites = cone_interval(cone, 2.0 * t);
    if (cone_sites.is_empty()) return std::nullopt;
    switch (rule) {
        case SiteRule::zero:
            if (!cone_sites.contains(0)) return std::nullopt;
            return 0;
        case SiteRule::left: return static_cast<std::int32_t>(cone_sites.lo);
        case SiteRule::right: return static_cast<std::int32_t>(cone_sites.hi);
    }
    return std::nullopt;
}

DecayRealization run_decay_realization(const InteractionKernel& kernel, const ConeSpec& cone, double t,
                                       const std::vector<SiteRule>& rules, std::uint64_t seed,
                                       const WindowOptions& window) {
    const double horizon = 2.0 * t;
    const auto win = SpaceTimeWindow::centered(window.half_width(kernel, cone, horizon), horizon);
    const EventLog log = generate_log(kernel, win, seed);
    const Sandwich sandwich = full_start_sandwich(log, cone, horizon);
    const Trajectory origin =
        evolve(log, Configuration::from_sites(win, {0}), BoundaryPolicy::vacant_outside, horizon);
    const bool base_certified = sandwich.certified_through(horizon) && !contact_by(origin, horizon);
    const Configuration o_mid = origin.state_at(t);
    const Configuration& o_end = origin.final_state();
    const Configuration& z_end = sandwich.lower.final_state();

    std::vector<std::optional<std::int32_t>> sites;
    std::vector<std::int32_t> apexes;
    for (SiteRule rule : rules) {
        sites.push_back(choose_site(rule, cone, t));
        if (!sites.back()) continue;
        if (!win.contains_site(*sites.back())) throw ParameterError("decay site outside the window");
        apexes.push_back(*sites.back());
    }
    const auto duals = build_duals(log, t, apexes);

    DecayRealization out;
    std::size_t next_dual = 0;
    for (const auto& x : sites) {
        if (!x) {
            out.per_rule.emplace_back();
            continue;
        }
        const Trajectory& dual = duals[next_dual++];
        const Configuration& dual_end = dual.final_state();
        const bool meet = o_mid.intersects(dual_end);
        DecayObservation obs;
        obs.eq1_event = !o_end.is_empty() && o_end.occupied(*x) != z_end.occupied(*x);
        obs.eq2_event = !o_mid.is_empty() && !dual_end.is_empty() && !meet;
        obs.implication_holds = !meet || (o_end.occupied(*x) && z_end.occupied(*x));
        obs.certified = base_certified && !contact_by(dual, t);
        out.per_rule.push_back(obs);
    }
    return out;
}

DecayResult decay_experiment(const InteractionKernel& kernel, const ConeSpec& cone, const std::vector<SiteRule>& rules,
                             const std::vector<double>& t_grid, std::uint64_t replicates, const RunContext& ctx) {
    cone.validate();
    check_replicates(replicates);
    if (rules.empty()) throw ParameterError("no site rules given");
    if (t_grid.empty()) throw ParameterError("t grid is empty");
    for (double t : t_grid) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw ParameterError("t grid entries must be finite and >= 0");
    }

    DecayResult result;
    auto& rep = result.report;
    rep.experiment = "decay";
    rep.grid.columns = {"t", "rule", "equation", "count", "certified", "estimate", "stderr"};
    std::vector<std::vector<DecayPoint>> eq1(rules.size()), eq2(rules.size());
    std::uint64_t observations = 0;
    for (std::size_t gi = 0; gi < t_grid.size(); ++gi) {
        const double t = t_grid[gi];
        const auto reals = parallel_map(replicates, ctx.workers, [&](std::size_t r) {
            return run_decay_realization(kernel, cone, t, rules, replicate_seed(ctx.seed, "decay", gi, r), ctx.window);
        });
        for (std::uint64_t r = 0; r < replicates; ++r) rep.seeds.push_back({gi, r, replicate_seed(ctx.seed, "decay", gi, r)});
        for (std::size_t k = 0; k < rules.size(); ++k) {
            std::uint64_t certified = 0, c1 = 0, c2 = 0, seen = 0;
            for (const auto& real : reals) {
                const auto& obs = real.per_rule[k];
                if (!obs) continue;
                ++seen;
                if (!obs->certified) continue;
                ++certified;
                c1 += obs->eq1_event;
                c2 += obs->eq2_event;
                result.implication_exceptions += !obs->implication_holds;
            }
            observations += seen;
            result.certified += certified;
            result.uncertified += seen - certified;
            if (seen == 0) {
                rep.notes.push_back(std::string("rule ") + to_string(rules[k]) + " has no cone site at t = " +
                                    std::to_string(t));
                continue;
            }
            if (certified == 0) continue;
            eq1[k].push_back(decay_point(t, c1, certified));
            eq2[k].push_back(decay_point(t, c2, certified));
            const double rule_id = static_cast<double>(rules[k]);
            rep.grid.rows.push_back({t, rule_id, 1.0, static_cast<double>(c1), static_cast<double>(certified),
                                     eq1[k].back().estimate, eq1[k].back().stderr_});
            rep.grid.rows.push_back({t, rule_id, 2.0, static_cast<double>(c2), static_cast<double>(certified),
                                     eq2[k].back().estimate, eq2[k].back().stderr_});
        }
    }
    if (observations == 0) throw EstimationError("no site rule produced a cone site on the t grid");
    check_certified_fraction(result.certified, observations, ctx);

    nlohmann::json fits = nlohmann::json::object();
    for (std::size_t k = 0; k < rules.size(); ++k) {
        for (int eq : {1, 2}) {
            DecayFit fit = fit_log_linear(eq == 1 ? eq1[k] : eq2[k], 0.95);
            const std::string name = std::string("eq") + std::to_string(eq) + "_" + to_string(rules[k]);
            fits[name] = to_json(fit);
            rep.verdicts.emplace_back(name + "_slope_negative", fit.decays());
            for (double d : fit.dropped) {
                rep.notes.push_back(name + ": zero count at t = " + std::to_string(d) + ", dropped from the fit");
            }
            result.series.push_back({rules[k], eq, std::move(fit)});
        }
    }
    rep.verdicts.emplace_back("implication_zero_exceptions", result.implication_exceptions == 0);
    rep.estimates = {{"fits", fits}, {"implication_exceptions", result.implication_exceptions}};
    rep.certificates = certificate_json(result.certified, observations);
    rep.notes.push_back("grid rule column: 0 = zero, 1 = left end of I_2t, 2 = right end of I_2t");
    rep.parameters = {{"kernel", kernel_json(kernel)}, {"cone", cone_json(cone)}, {"t_grid", t_grid},
                      {"replicates", replicates},      {"window", window_json(ctx.window)}};
    nlohmann::json rule_names = nlohmann::json::array();
    for (SiteRule r : rules) rule_names.push_back(to_string(r));
    rep.parameters["x_rules"] = rule_names;
    return result;
}

// ---------------------------------------------------------------- box clearing

SpaceTimeBox clearing_box(const ConeSpec& cone, int n0) {
    cone.validate();
    if (n0 < 0) throw ParameterError("n0 must be >= 0");
    // Smallest integers strictly greater than the two reaches.
    const double right_reach = std::max(0.0, cone.right_speed() * n0);
    const double left_reach = -std::min(0.0, cone.left_speed() * n0);
    const auto v_r = static_cast<std::int32_t>(std::floor(right_reach)) + 1;
    const auto v_l = static_cast<std::int32_t>(std::floor(left_reach)) + 1;
    return {-v_l, v_r, 0.0, static_cast<double>(n0)};
}

BoxClearObservation run_boxclear_realization(const InteractionKernel& kernel, const ConeSpec& cone, int n0,
                                             double horizon, std::uint64_t seed, const WindowOptions& window) {
    const auto win = SpaceTimeWindow::centered(window.half_width(kernel, cone, horizon), horizon);
    const EventLog log = generate_log(kernel, win, seed);
    const Sandwich sandwich = full_start_sandwich(log, cone, horizon);
    const Trajectory origin =
        evolve(log, Configuration::from_sites(win, {0}), BoundaryPolicy::vacant_outside, horizon);

    BoxClearObservation obs;
    const bool certified = sandwich.certified_through(horizon) && !contact_by(origin, horizon);
    obs.qualifies = certified && agreement_on_cone(origin, sandwich.lower, cone, horizon, n0).holds_for_all_t;
    if (!obs.qualifies) return obs;

    const SpaceTimeBox box = clearing_box(cone, n0);
    const EventLog cleared = clear_deaths_in_box(log, box);
    obs.cleared_deaths = log.death_count() - cleared.death_count();
    std::vector<std::int32_t> v_sites;
    for (std::int32_t x = box.site_lo; x <= box.site_hi; ++x) v_sites.push_back(x);
    const Sandwich sandwich2 = full_start_sandwich(cleared, cone, horizon);
    const Trajectory v_start =
        evolve(cleared, Configuration::from_sites(win, v_sites), BoundaryPolicy::vacant_outside, horizon);
    obs.transformed_agrees = agreement_on_cone(v_start, sandwich2.lower, cone, horizon).holds_for_all_t;
    obs.transformed_certified = sandwich2.certified_through(horizon) && !contact_by(v_start, horizon);
    return obs;
}

ExperimentReport boxclear_proof_check(const InteractionKernel& kernel, const ConeSpec& cone, int n0, double horizon,
                                      std::uint64_t replicates, const RunContext& ctx) {
    cone.validate();
    check_replicates(replicates);
    if (n0 < 0) throw ParameterError("n0 must be >= 0");
    if (!(horizon > n0)) throw ParameterError("boxclear needs T > n0");
    const SpaceTimeBox box = clearing_box(cone, n0);
    const auto obs = parallel_map(replicates, ctx.workers, [&](std::size_t r) {
        return run_boxclear_realization(kernel, cone, n0, horizon, replicate_seed(ctx.seed, "boxclear", 0, r),
                                        ctx.window);
    });

    ExperimentReport rep;
    rep.experiment = "boxclear";
    std::uint64_t qualifying = 0, f_events = 0, counter = 0, counter_certified = 0, certified2 = 0;
    nlohmann::json counterexamples = nlohmann::json::array();
    for (std::uint64_t r = 0; r < replicates; ++r) {
        const auto& o = obs[r];
        rep.seeds.push_back({0, r, replicate_seed(ctx.seed, "boxclear", 0, r)});
        if (!o.qualifies) continue;
        ++qualifying;
        f_events += o.cleared_deaths == 0;
        certified2 += o.transformed_certified;
        if (!o.transformed_agrees) {
            ++counter;
            counter_certified += o.transformed_certified;
            counterexamples.push_back({{"replicate", r},
                                       {"seed", replicate_seed(ctx.seed, "boxclear", 0, r)},
                                       {"certified", o.transformed_certified},
                                       {"cleared_deaths", o.cleared_deaths}});
        }
    }
    rep.parameters = {{"kernel", kernel_json(kernel)}, {"cone", cone_json(cone)}, {"n0", n0},
                      {"horizon", horizon},            {"replicates", replicates}, {"window", window_json(ctx.window)}};
    rep.estimates = {{"box", {{"v_l", -box.site_lo}, {"v_r", box.site_hi}, {"t_hi", box.t_hi}}},
                     {"qualifying", qualifying},
                     {"skipped", replicates - qualifying},
                     {"death_free_box_among_qualifying", f_events},
                     {"counterexamples", counter},
                     {"counterexamples_certified", counter_certified},
                     {"counterexample_list", counterexamples}};
    rep.certificates = {{"qualifying_require_certificate", true},
                        {"transformed_certified", certified2},
                        {"transformed_uncertified", qualifying - certified2}};
    rep.verdicts.emplace_back("zero_counterexamples", counter == 0);
    rep.grid.columns = {"n0", "T", "v_l", "v_r", "replicates", "qualifying", "death_free_box", "counterexamples"};
    rep.grid.rows.push_back({static_cast<double>(n0), horizon, static_cast<double>(-box.site_lo),
                             static_cast<double>(box.site_hi), static_cast<double>(replicates),
                             static_cast<double>(qualifying), static_cast<double>(f_events),
                             static_cast<double>(counter)});
    return rep;
}

ExperimentReport box_death_free_probability(int v_site_count, double n0, std::uint64_t replicates,
                                            const RunContext& ctx) {
    if (v_site_count < 1) throw ParameterError("V must contain at least one site");
    if (!(n0 >= 0.0) || !std::isfinite(n0)) throw ParameterError("n0 must be finite and >= 0");
    check_replicates(replicates);
    struct Rep {
        std::uint64_t deaths = 0;
    };
    const auto reps = parallel_map(replicates, ctx.workers, [&](std::size_t r) {
        const auto seed = replicate_seed(ctx.seed, "deathfree", 0, r);
        Rep out;
        for (int x = 0; x < v_site_count; ++x) out.deaths += death_times(seed, x, n0).size();
        return out;
    });
    double sum = 0.0;
    std::uint64_t voids = 0;
    for (const auto& r : reps) {
        sum += static_cast<double>(r.deaths);
        voids += r.deaths == 0;
    }
    const double n = static_cast<double>(replicates);
    const double expected_mean = v_site_count * n0;
    const double mean = sum / n;
    const double mean_sigma = std::sqrt(expected_mean / n);
    const double p_void = std::exp(-expected_mean);
    const double freq = static_cast<double>(voids) / n;

    ExperimentReport rep;
    rep.experiment = "boxclear-deathfree";
    rep.parameters = {{"V_site_count", v_site_count}, {"n0", n0}, {"replicates", replicates}};
    rep.estimates = {{"death_count_mean", mean},
                     {"death_count_expected", expected_mean},
                     {"death_count_mean_sigma", mean_sigma},
                     {"void_frequency", freq},
                     {"void_expected", p_void},
                     {"void_count", voids},
                     {"alternative_exponent_value", std::exp(-(2.0 * v_site_count + 1.0) * n0)}};
    rep.notes.push_back("alternative_exponent_value is exp(-(2*sites+1)*n0), reported for comparison only");
    rep.verdicts.emplace_back("death_mean_within_3sigma", std::abs(mean - expected_mean) <= 3.0 * mean_sigma);
    if (n * p_void >= 10.0) {
        const double sigma = std::sqrt(p_void * (1.0 - p_void) / n);
        rep.verdicts.emplace_back("void_frequency_within_3sigma", std::abs(freq - p_void) <= 3.0 * sigma);
    } else {
        rep.notes.push_back("expected void count below 10; void frequency reported without a verdict");
    }
    for (std::uint64_t r = 0; r < replicates; ++r) rep.seeds.push_back({0, r, replicate_seed(ctx.seed, "deathfree", 0, r)});
    rep.grid.columns = {"V_site_count", "n0", "replicates", "death_mean", "death_expected", "void_frequency",
                        "void_expected"};
    rep.grid.rows.push_back({static_cast<double>(v_site_count), n0, n, mean, expected_mean, freq, p_void});
    return rep;
}

// ---------------------------------------------------------------- extinction tail

ExtinctionTailResult extinction_tail_experiment(const InteractionKernel& kernel, const std::vector<double>& t_grid,
                                                double t_max, std::uint64_t replicates, const RunContext& ctx) {
    check_replicates(replicates);
    if (t_grid.empty()) throw ParameterError("t grid is empty");
    for (double t : t_grid) {
        if (!(t >= 0.0) || !(t < t_max)) throw ParameterError("t grid entries must lie in [0, t_max)");
    }
    ExtinctionTailResult result;
    auto& rep = result.report;
    rep.experiment = "extinction-tail";
    rep.grid.columns = {"t", "count", "trials", "estimate", "stderr", "alive_at_t_max"};
    std::vector<DecayPoint> points;
    std::uint64_t survivors = 0;
    for (std::size_t gi = 0; gi < t_grid.size(); ++gi) {
        const double t = t_grid[gi];
        struct Rep {
            bool event = false;
            bool survived = false;
        };
        const auto reps = parallel_map(replicates, ctx.workers, [&](std::size_t r) {
            const auto run = run_from_origin(kernel, replicate_seed(ctx.seed, "extinction", gi, r), t_max);
            return Rep{run.trajectory.alive_at(t) && !run.survived, run.survived};
        });
        std::uint64_t count = 0, alive = 0;
        for (std::uint64_t r = 0; r < replicates; ++r) {
            count += reps[r].event;
            alive += reps[r].survived;
            rep.seeds.push_back({gi, r, replicate_seed(ctx.seed, "extinction", gi, r)});
        }
        survivors += alive;
        points.push_back(decay_point(t, count, replicates));
        rep.grid.rows.push_back({t, static_cast<double>(count), static_cast<double>(replicates),
                                 points.back().estimate, points.back().stderr_, static_cast<double>(alive)});
    }
    result.fit = fit_log_linear(std::move(points), 0.95);
    result.subcritical_flag = survivors == 0;
    const auto survival = wilson_interval(survivors, replicates * t_grid.size(), ctx.confidence);
    rep.parameters = {{"kernel", kernel_json(kernel)}, {"t_grid", t_grid}, {"t_max", t_max}, {"replicates", replicates}};
    rep.estimates = {{"fit", to_json(result.fit)}, {"survival_to_t_max", to_json(survival)}};
    if (result.subcritical_flag) {
        rep.notes.push_back("no run survived to t_max: the kernel looks subcritical and the estimate is just "
                            "P(alive at t); no exponential conclusion is drawn");
    }
    for (double d : result.fit.dropped) rep.notes.push_back("zero count at t = " + std::to_string(d) + ", dropped");
    rep.verdicts.emplace_back("supercritical", !result.subcritical_flag);
    rep.verdicts.emplace_back("tail_slope_negative", result.fit.decays());
    return result;
}

}  // namespace conecouple
