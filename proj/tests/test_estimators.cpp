#include "conecouple/error.hpp"
#include "conecouple/estimators.hpp"
#include "conecouple/random.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace conecouple;
using Catch::Approx;

// Reference values below come from statsmodels and scipy.

TEST_CASE("normal quantiles", "[estimators]") {
    REQUIRE(normal_quantile(0.975) == Approx(1.959963984540054).epsilon(1e-12));
    REQUIRE(normal_quantile(0.995) == Approx(2.5758293035489004).epsilon(1e-12));
    REQUIRE(normal_quantile(0.1) == Approx(-1.2815515655446004).epsilon(1e-12));
    REQUIRE_THROWS_AS(normal_quantile(0.0), ParameterError);
    REQUIRE_THROWS_AS(normal_quantile(1.0), ParameterError);
}

TEST_CASE("Wilson intervals", "[estimators]") {
    struct Case {
        std::uint64_t k, n;
        double conf, lo, hi;
    };
    for (const auto& c : {Case{0, 10, 0.95, 0.0, 0.2775327998628892},
                          Case{5, 10, 0.95, 0.236593090512564, 0.7634069094874361},
                          Case{10, 10, 0.99, 0.6011459066950919, 1.0},
                          Case{37, 200, 0.99, 0.12480384348632112, 0.265424999402275},
                          Case{1, 100000, 0.95, 1.7652477303783126e-06, 5.664709659040966e-05}}) {
        const auto p = wilson_interval(c.k, c.n, c.conf);
        REQUIRE(p.estimate == Approx(static_cast<double>(c.k) / c.n));
        REQUIRE(p.ci.lo == Approx(c.lo).epsilon(1e-9).margin(1e-15));
        REQUIRE(p.ci.hi == Approx(c.hi).epsilon(1e-9));
        REQUIRE(p.ci.width() > 0.0);
        REQUIRE(p.ci.contains(p.estimate));
    }
    REQUIRE(wilson_interval(0, 10, 0.95).ci.lo == 0.0);
    REQUIRE(wilson_interval(10, 10, 0.99).ci.hi == 1.0);
    REQUIRE_THROWS_AS(wilson_interval(0, 0, 0.95), EstimationError);
    REQUIRE_THROWS_AS(wilson_interval(3, 2, 0.95), ParameterError);
    REQUIRE_THROWS_AS(wilson_interval(1, 2, 1.0), ParameterError);
}

TEST_CASE("Wilson half-widths shrink like n^-1/2", "[estimators]") {
    const double w1 = wilson_interval(300, 1000, 0.99).ci.width();
    const double w4 = wilson_interval(1200, 4000, 0.99).ci.width();
    REQUIRE(w1 / w4 == Approx(2.0).epsilon(0.01));
}

TEST_CASE("log-linear fit matches weighted least squares", "[estimators]") {
    std::vector<DecayPoint> grid;
    const double ts[] = {2, 4, 6, 8, 10};
    const std::uint64_t counts[] = {800, 300, 120, 40, 15};
    for (int i = 0; i < 5; ++i) grid.push_back(decay_point(ts[i], counts[i], 10000));
    const auto fit = fit_log_linear(grid, 0.95);
    REQUIRE(fit.fitted);
    REQUIRE(fit.slope == Approx(-0.48870911).epsilon(1e-6));
    REQUIRE(fit.intercept == Approx(-1.5465391).epsilon(1e-6));
    REQUIRE(fit.slope_ci.width() / 2 == Approx(1.959963984540054 * 0.01580599).epsilon(1e-5));
    REQUIRE(fit.intercept_ci.width() / 2 == Approx(1.959963984540054 * 0.0557641).epsilon(1e-5));
    REQUIRE(fit.gamma() == Approx(0.48870911).epsilon(1e-6));
    REQUIRE(fit.decays());
    REQUIRE(fit.dropped.empty());
}

TEST_CASE("log-linear fit recovers an exact exponential", "[estimators]") {
    std::vector<DecayPoint> grid;
    for (double t : {0.0, 5.0, 10.0, 15.0, 20.0}) {
        const auto count = static_cast<std::uint64_t>(std::llround(1e6 * 0.3 * std::exp(-0.2 * t)));
        grid.push_back(decay_point(t, count, 1000000));
    }
    const auto fit = fit_log_linear(grid);
    REQUIRE(fit.slope == Approx(-0.2).epsilon(1e-3));
    REQUIRE(std::exp(fit.intercept) == Approx(0.3).epsilon(1e-3));
    REQUIRE(fit.slope_ci.contains(-0.2));
}

TEST_CASE("zero counts are dropped and too few points leave the fit empty", "[estimators]") {
    std::vector<DecayPoint> grid{decay_point(1, 50, 100), decay_point(2, 10, 100), decay_point(3, 0, 100)};
    auto fit = fit_log_linear(grid);
    REQUIRE(fit.fitted);
    REQUIRE(fit.dropped == std::vector<double>{3});
    REQUIRE_FALSE(fit.grid[2].used);

    fit = fit_log_linear({decay_point(1, 50, 100), decay_point(2, 0, 100)});
    REQUIRE_FALSE(fit.fitted);
    REQUIRE_FALSE(fit.decays());

    // A flat estimate does not decay.
    fit = fit_log_linear({decay_point(1, 500, 1000), decay_point(2, 500, 1000), decay_point(3, 500, 1000)});
    REQUIRE(fit.fitted);
    REQUIRE(fit.slope == Approx(0.0).margin(1e-12));
    REQUIRE_FALSE(fit.decays());
    REQUIRE_THROWS_AS(decay_point(1, 0, 0), EstimationError);
}

TEST_CASE("decay point standard errors", "[estimators]") {
    const auto pt = decay_point(4.0, 25, 100);
    REQUIRE(pt.estimate == 0.25);
    REQUIRE(pt.stderr_ == Approx(std::sqrt(0.25 * 0.75 / 100)));
}

TEST_CASE("bootstrap intervals", "[estimators]") {
    SplitMix64 rng(4);
    std::vector<double> small(200), large(3200);
    for (auto& v : small) v = rng.uniform();
    for (auto& v : large) v = rng.uniform();
    const auto ci = bootstrap_mean_ci(small, 0.95, 2000, 1);
    REQUIRE(ci.contains(mean_of(small)));
    REQUIRE(ci.lo < ci.hi);
    // Normal-theory width 2 * 1.96 * sqrt(1/12 / 200), to bootstrap accuracy.
    REQUIRE(ci.width() == Approx(2 * 1.96 * std::sqrt(1.0 / 12 / 200)).epsilon(0.15));
    REQUIRE(bootstrap_mean_ci(small, 0.95, 2000, 1).lo == ci.lo);
    const auto wide = bootstrap_mean_ci(large, 0.95, 2000, 1);
    REQUIRE(ci.width() / wide.width() == Approx(4.0).epsilon(0.2));

    const std::vector<double> constant(50, 2.5);
    const auto flat = bootstrap_mean_ci(constant, 0.99, 100, 9);
    REQUIRE(flat.lo == 2.5);
    REQUIRE(flat.hi == 2.5);
    REQUIRE_THROWS_AS(bootstrap_mean_ci(std::vector<double>{}, 0.95, 10, 1), EstimationError);
    REQUIRE_THROWS_AS(mean_of(std::vector<double>{}), EstimationError);
}

TEST_CASE("chi-square homogeneity", "[estimators]") {
    const std::vector<std::uint64_t> a{30, 50, 20}, b{40, 40, 20};
    REQUIRE(chi_square_homogeneity(a, b) == Approx(0.28087620176428163).epsilon(1e-9));
    REQUIRE(chi_square_homogeneity(a, a) == Approx(1.0));

    const std::vector<std::uint64_t> c{500, 100, 0, 0}, d{100, 500, 0, 0};
    REQUIRE(chi_square_homogeneity(c, d) < 1e-10);

    // Sparse bins are merged, so they cannot dominate the statistic.
    const std::vector<std::uint64_t> e{100, 100, 1, 0}, f{100, 100, 0, 1};
    REQUIRE(chi_square_homogeneity(e, f) > 0.5);

    REQUIRE_THROWS_AS(chi_square_homogeneity(a, std::vector<std::uint64_t>{1, 2}), ParameterError);
    REQUIRE_THROWS_AS(chi_square_homogeneity(a, std::vector<std::uint64_t>{0, 0, 0}), EstimationError);
}
