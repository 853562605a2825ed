#include "conecouple/error.hpp"
#include "conecouple/experiments.hpp"
#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace conecouple;
using namespace testsupport;
using Catch::Approx;

namespace {

const InteractionKernel nn = InteractionKernel::uniform(1, 2.0);
const ConeSpec cone{0.7, -0.7, 0.28};

RunContext context(std::uint64_t seed, unsigned workers = 0) {
    RunContext ctx;
    ctx.seed = seed;
    ctx.workers = workers;
    return ctx;
}

bool verdict(const ExperimentReport& rep, const std::string& name) {
    for (const auto& [n, ok] : rep.verdicts) {
        if (n == name) return ok;
    }
    FAIL("missing verdict " << name);
    return false;
}

bool has_verdict(const ExperimentReport& rep, const std::string& name) {
    for (const auto& v : rep.verdicts) {
        if (v.first == name) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("tables render as CSV and plot text", "[report]") {
    Table t{{"a", "b"}, {{1.0, 0.5}, {-2.0, 1e-7}}};
    REQUIRE(t.to_csv() == "a,b\n1,0.5\n-2,1e-07\n");
    REQUIRE(t.to_plot_text() == "# a b\n1 0.5\n-2 1e-07\n");
}

TEST_CASE("replicate seeds separate streams, grid points and replicates", "[report]") {
    const auto s = replicate_seed(1, "cone", 0, 0);
    REQUIRE(s == replicate_seed(1, "cone", 0, 0));
    REQUIRE(s != replicate_seed(1, "cone", 0, 1));
    REQUIRE(s != replicate_seed(1, "cone", 1, 0));
    REQUIRE(s != replicate_seed(1, "decay", 0, 0));
    REQUIRE(s != replicate_seed(2, "cone", 0, 0));
}

TEST_CASE("reports serialize verdicts and pass state", "[report]") {
    ExperimentReport rep;
    rep.experiment = "x";
    rep.verdicts = {{"a", true}, {"b", false}};
    rep.seeds = {{0, 0, 5}};
    const auto j = rep.to_json();
    REQUIRE(j.at("verdicts").at("a") == true);
    REQUIRE(j.at("passed") == false);
    REQUIRE(j.at("replicate_seeds").at("count") == 1);
    REQUIRE(rep.summary_text().find("FAIL b") != std::string::npos);
}

TEST_CASE("single-site runs equal a replay on one wide window", "[experiments]") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto run = run_from_origin(nn, seed, 20.0, 4);
        const auto w = SpaceTimeWindow::centered(200, 20.0);
        const auto wide = evolve(generate_log(nn, w, seed), Configuration::from_sites(w, {0}),
                                 BoundaryPolicy::vacant_outside, 20.0);
        REQUIRE_FALSE(wide.boundary_contact_time());
        if (run.survived) {
            REQUIRE(as_set(run.trajectory.final_state()) == as_set(wide.final_state()));
            REQUIRE(run.trajectory.t_end() == 20.0);
        } else {
            REQUIRE(wide.final_state().is_empty());
            REQUIRE(run.trajectory.extinction_time() == wide.extinction_time());
        }
    }
}

TEST_CASE("velocities of the symmetric kernel", "[experiments]") {
    std::vector<SeedRecord> seeds;
    const auto est = estimate_velocities(nn, 30.0, 400, context(3), &seeds);
    REQUIRE(seeds.size() == 400);
    REQUIRE(est.survivors > 0);
    REQUIRE(est.alpha_hat > 0.4);
    REQUIRE(est.beta_hat < -0.4);
    REQUIRE(est.alpha_ci.contains(est.alpha_hat));
    REQUIRE(est.alpha_ci.width() > 0.0);
    const auto rep = velocity_report(est, nn);
    REQUIRE(verdict(rep, "survival_lower_bound_positive"));
    REQUIRE(verdict(rep, "alpha_and_minus_beta_overlap"));

    const auto skew = velocity_report(estimate_velocities(InteractionKernel(1, {1.0, 3.0}), 20.0, 100, context(3)),
                                      InteractionKernel(1, {1.0, 3.0}));
    REQUIRE_FALSE(has_verdict(skew, "alpha_and_minus_beta_overlap"));
}

TEST_CASE("a subcritical kernel has no survivors to estimate from", "[experiments]") {
    REQUIRE_THROWS_AS(estimate_velocities(InteractionKernel::uniform(1, 0.3), 50.0, 200, context(1)), EstimationError);
    REQUIRE_THROWS_AS(estimate_velocities(nn, 10.0, 0, context(1)), ParameterError);
}

TEST_CASE("cone experiments reject an empty cone", "[experiments]") {
    REQUIRE_THROWS_AS(theorem1_experiment(nn, {0.5, -0.5, 0.5}, {10}, 10, context(1)), ParameterError);
    REQUIRE_THROWS_AS(theorem1_experiment(nn, cone, {10}, 0, context(1)), ParameterError);
    REQUIRE_THROWS_AS(theorem1_experiment(nn, cone, {}, 10, context(1)), ParameterError);
}

TEST_CASE("cone agreement estimates are nonincreasing in T", "[experiments]") {
    const auto reps = run_cone_replicates(nn, cone, 20.0, 300, context(9));
    for (const auto& r : reps) {
        // Agreement through T' implies agreement through every T < T'.
        for (double t : {5.0, 10.0}) REQUIRE((!r.agreement.agrees_through(2 * t) || r.agreement.agrees_through(t)));
    }
    const auto rep = theorem1_report(reps, {5, 10, 20}, context(9));
    const auto& rows = rep.grid.rows;
    REQUIRE(rows.size() == 3);
    REQUIRE(rows[0][3] >= rows[1][3]);
    REQUIRE(rows[1][3] >= rows[2][3]);
    REQUIRE(verdict(rep, "positive_at_largest_T"));
    REQUIRE(has_verdict(rep, "stabilizing_5_10_20"));
    REQUIRE(rep.seeds.size() == 300);
    REQUIRE_THROWS_AS(theorem1_report(reps, {40}, context(9)), ParameterError);
}

TEST_CASE("a window that is too small asks to be enlarged", "[experiments]") {
    RunContext ctx = context(4);
    ctx.window.margin = 0;
    ctx.max_uncertified_fraction = 0.0;
    const auto reps = run_cone_replicates(InteractionKernel::uniform(1, 4.0), {1.5, -1.5, 0.5}, 20.0, 200, ctx);
    try {
        theorem1_report(reps, {20}, ctx);
        FAIL("expected an estimation error");
    } catch (const EstimationError& e) {
        REQUIRE(std::string(e.what()).find("enlarge the window") != std::string::npos);
    }
}

TEST_CASE("coupling-time tails", "[experiments]") {
    const auto reps = run_cone_replicates(nn, cone, 20.0, 300, context(9));
    const auto rep = coupling_time_report(reps, 20.0, context(9));
    REQUIRE(rep.grid.rows.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) REQUIRE(rep.grid.rows[k][0] == Approx(2.5 * k));
    for (std::size_t k = 1; k < 8; ++k) REQUIRE(rep.grid.rows[k][1] <= rep.grid.rows[k - 1][1]);
    REQUIRE(has_verdict(rep, "tail_halves_from_T4_to_T2"));

    // Runs agreeing from time 0 have no last disagreement and sit in the zero bucket.
    std::uint64_t from_start = 0, survivors = 0;
    for (const auto& r : reps) {
        if (!r.certified_through(20.0) || !r.o_alive_at(20.0)) continue;
        ++survivors;
        from_start += !r.agreement.last_disagreement_time;
    }
    REQUIRE(rep.estimates.at("agree_from_start") == from_start);
    REQUIRE(rep.estimates.at("survivors") == survivors);
    REQUIRE(rep.grid.rows[0][1] == static_cast<double>(survivors - from_start));
    REQUIRE_THROWS_AS(coupling_time_report(reps, 10.0, context(9)), ParameterError);
}

TEST_CASE("the tail ratio is vacuous without late disagreements", "[experiments]") {
    ConeReplicate r;
    r.horizon = 40.0;
    const std::vector<ConeReplicate> reps(10, r);
    const auto rep = coupling_time_report(reps, 40.0, context(1));
    REQUIRE(verdict(rep, "tail_halves_from_T4_to_T2"));
    REQUIRE(rep.estimates.at("agree_from_start") == 10);
}

TEST_CASE("decay sites come from I_2t", "[experiments]") {
    const ConeSpec c{1.0, -1.0, 0.25};
    REQUIRE(choose_site(SiteRule::zero, c, 2.0) == 0);
    REQUIRE(choose_site(SiteRule::left, c, 2.0) == -3);
    REQUIRE(choose_site(SiteRule::right, c, 2.0) == 3);
    const ConeSpec shifted{1.0, 0.5, 0.1};
    REQUIRE_FALSE(choose_site(SiteRule::zero, shifted, 5.0));
    REQUIRE(choose_site(SiteRule::left, shifted, 5.0) == 6);
    REQUIRE_FALSE(choose_site(SiteRule::left, shifted, 0.25));
    for (SiteRule r : {SiteRule::zero, SiteRule::left, SiteRule::right}) {
        REQUIRE(site_rule_from_string(to_string(r)) == r);
    }
    REQUIRE_THROWS_AS(site_rule_from_string("middle"), ParameterError);
}

TEST_CASE("at t = 0 the eq1 event is impossible", "[experiments]") {
    const std::vector<SiteRule> rules{SiteRule::zero};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto real = run_decay_realization(nn, cone, 0.0, rules, seed, {});
        REQUIRE(real.per_rule[0]);
        REQUIRE_FALSE(real.per_rule[0]->eq1_event);
        REQUIRE_FALSE(real.per_rule[0]->eq2_event);
    }
}

TEST_CASE("decay observations agree with direct replays", "[experiments]") {
    const std::vector<SiteRule> rules{SiteRule::zero, SiteRule::left, SiteRule::right};
    const WindowOptions window;
    int meetings = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const double t = 3.0;
        const auto real = run_decay_realization(nn, cone, t, rules, seed, window);
        const auto w = SpaceTimeWindow::centered(window.half_width(nn, cone, 2 * t), 2 * t);
        const auto log = generate_log(nn, w, seed);
        const auto o_mid = naive_replay(log, {0}, t);
        const auto o_end = naive_replay(log, {0}, 2 * t);
        SiteSet full;
        for (std::int32_t x = w.x_min; x <= w.x_max; ++x) full.insert(x);
        const auto z_end = naive_replay(log, full, 2 * t);
        for (std::size_t k = 0; k < rules.size(); ++k) {
            const auto x = *choose_site(rules[k], cone, t);
            const auto& obs = *real.per_rule[k];
            REQUIRE(obs.eq1_event == (!o_end.empty() && o_end.count(x) != z_end.count(x)));
            REQUIRE(obs.implication_holds);
            // By duality the dual meets xi^O_t exactly when x is occupied at 2t.
            const bool meet = o_end.count(x) > 0;
            meetings += meet;
            if (meet) {
                REQUIRE_FALSE(obs.eq2_event);
                REQUIRE(z_end.count(x));
            }
            if (o_mid.empty()) REQUIRE_FALSE(obs.eq2_event);
        }
    }
    REQUIRE(meetings > 0);
}

TEST_CASE("small decay experiment", "[experiments]") {
    const auto res = decay_experiment(nn, cone, {SiteRule::zero, SiteRule::right}, {2, 4, 6}, 300, context(5));
    REQUIRE(res.implication_exceptions == 0);
    REQUIRE(res.series.size() == 4);
    REQUIRE(verdict(res.report, "implication_zero_exceptions"));
    REQUIRE(has_verdict(res.report, "eq1_zero_slope_negative"));
    REQUIRE(has_verdict(res.report, "eq2_right_slope_negative"));
    REQUIRE(res.report.seeds.size() == 900);
    REQUIRE(res.certified + res.uncertified == 1800);
    REQUIRE_THROWS_AS(decay_experiment(nn, cone, {}, {2}, 10, context(5)), ParameterError);
    REQUIRE_THROWS_AS(decay_experiment(nn, cone, {SiteRule::zero}, {-1}, 10, context(5)), ParameterError);
}

TEST_CASE("clearing boxes use the smallest integers beyond the reaches", "[experiments]") {
    const auto box = clearing_box(cone, 5);
    REQUIRE(box.site_lo == -3);
    REQUIRE(box.site_hi == 3);
    REQUIRE(box.t_lo == 0.0);
    REQUIRE(box.t_hi == 5.0);
    const auto shifted = clearing_box({1.0, 0.5, 0.1}, 5);
    REQUIRE(shifted.site_lo == -1);
    REQUIRE(shifted.site_hi == 5);
    // An exact integer reach still moves to the next integer.
    const auto exact = clearing_box({1.0, -1.0, 0.5}, 4);
    REQUIRE(exact.site_hi == 3);
    REQUIRE(exact.site_lo == -3);
    REQUIRE(clearing_box(cone, 0).site_count() == 3);
    REQUIRE_THROWS_AS(clearing_box(cone, -1), ParameterError);
}

TEST_CASE("box clearing never breaks agreement", "[experiments]") {
    const auto rep = boxclear_proof_check(nn, cone, 5, 40.0, 300, context(12));
    REQUIRE(verdict(rep, "zero_counterexamples"));
    REQUIRE(rep.estimates.at("qualifying").get<std::uint64_t>() > 20);
    REQUIRE(rep.estimates.at("counterexamples") == 0);
    REQUIRE_THROWS_AS(boxclear_proof_check(nn, cone, 5, 5.0, 10, context(1)), ParameterError);
}

TEST_CASE("a death-free box in an agreeing realization is left alone", "[experiments]") {
    // At n0 = 1 the box is small enough to be death-free now and then:
    // clearing is the identity and the V-start must agree with the full start.
    REQUIRE(clearing_box(cone, 1).site_count() <= 5);
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 3000 && checked < 3; ++seed) {
        const auto obs = run_boxclear_realization(nn, cone, 1, 40.0, seed, {});
        if (!obs.qualifies || obs.cleared_deaths != 0) continue;
        ++checked;
        REQUIRE(obs.transformed_agrees);
    }
    REQUIRE(checked > 0);
}

TEST_CASE("death-free box statistics", "[experiments]") {
    const auto rep = box_death_free_probability(1, 1.0, 100000, context(6));
    REQUIRE(verdict(rep, "death_mean_within_3sigma"));
    REQUIRE(verdict(rep, "void_frequency_within_3sigma"));
    REQUIRE(rep.estimates.at("void_expected").get<double>() == Approx(std::exp(-1.0)));
    REQUIRE(rep.estimates.at("alternative_exponent_value").get<double>() == Approx(std::exp(-3.0)));

    const auto none = box_death_free_probability(3, 0.0, 1000, context(6));
    REQUIRE(none.estimates.at("void_frequency") == 1.0);
    REQUIRE(none.estimates.at("death_count_mean") == 0.0);

    const auto rare = box_death_free_probability(7, 2.0, 10000, context(6));
    REQUIRE(verdict(rare, "death_mean_within_3sigma"));
    REQUIRE_FALSE(has_verdict(rare, "void_frequency_within_3sigma"));
    REQUIRE_THROWS_AS(box_death_free_probability(0, 1.0, 10, context(6)), ParameterError);
}

TEST_CASE("extinction tail", "[experiments]") {
    const auto res = extinction_tail_experiment(nn, {0.0, 2.0, 4.0}, 30.0, 300, context(8));
    REQUIRE(res.fit.grid[0].estimate < 1.0);
    REQUIRE(res.fit.grid[0].estimate > 0.0);
    REQUIRE_FALSE(res.subcritical_flag);
    REQUIRE(verdict(res.report, "supercritical"));

    const auto sub = extinction_tail_experiment(InteractionKernel::uniform(1, 0.3), {0.0, 1.0}, 30.0, 300, context(8));
    REQUIRE(sub.subcritical_flag);
    REQUIRE_FALSE(verdict(sub.report, "supercritical"));
    REQUIRE(sub.fit.grid[0].estimate == 1.0);
    REQUIRE_THROWS_AS(extinction_tail_experiment(nn, {30.0}, 30.0, 10, context(8)), ParameterError);
}

TEST_CASE("duality and oracle reports", "[experiments]") {
    const auto dual = duality_experiment(nn, 20, 3.0, 500, context(2));
    REQUIRE(dual.passed());
    const auto oracle = oracle_validation(nn, {1, 2}, {0.5, 1.0}, 5000, context(2));
    REQUIRE(oracle.passed());
    REQUIRE(verdict(oracle, "single_site_anchor_t0.5"));
}

TEST_CASE("experiments do not depend on the worker count", "[experiments]") {
    const auto a = theorem1_experiment(nn, cone, {5, 10}, 100, context(77, 1));
    const auto b = theorem1_experiment(nn, cone, {5, 10}, 100, context(77, 3));
    REQUIRE(a.to_json().dump() == b.to_json().dump());
    REQUIRE(a.grid.to_csv() == b.grid.to_csv());
}
