#include "conecouple/error.hpp"
#include "conecouple/percolation.hpp"
#include "conecouple/random.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <deque>
#include <random>
#include <set>

using namespace conecouple;

namespace {

/// Breadth-first reachability from the level-0 source through open sites.
std::vector<std::set<std::int32_t>> bfs_wet(const OrientedLattice& lat, int half_width = 0) {
    std::vector<std::set<std::int32_t>> levels(static_cast<std::size_t>(lat.depth) + 1);
    std::deque<std::pair<std::int32_t, int>> queue;
    for (int y = -half_width; y <= half_width; y += 2) {
        if (lat.is_open(y, 0)) {
            levels[0].insert(y);
            queue.emplace_back(y, 0);
        }
    }
    while (!queue.empty()) {
        const auto [y, n] = queue.front();
        queue.pop_front();
        if (n == lat.depth) continue;
        for (int dy : {-1, 1}) {
            const std::int32_t z = y + dy;
            auto& next = levels[static_cast<std::size_t>(n) + 1];
            if (!next.count(z) && lat.is_open(z, n + 1)) {
                next.insert(z);
                queue.emplace_back(z, n + 1);
            }
        }
    }
    return levels;
}

/// Survival to depth with its own random source, for a two-sample comparison.
bool transfer_matrix_survives(std::mt19937_64& rng, double p, int depth) {
    std::bernoulli_distribution open(p);
    std::vector<std::uint8_t> cur{static_cast<std::uint8_t>(open(rng))};
    for (int n = 0; n < depth; ++n) {
        std::vector<std::uint8_t> next(cur.size() + 1, 0);
        bool any = false;
        for (std::size_t i = 0; i < next.size(); ++i) {
            const bool fed = (i > 0 && cur[i - 1]) || (i < cur.size() && cur[i]);
            if (fed && open(rng)) next[i] = 1, any = true;
        }
        if (!any) return false;
        cur.swap(next);
    }
    return true;
}

std::uint64_t closed_origin_seed(double p) {
    for (std::uint64_t s = 0;; ++s) {
        if (!OrientedLattice{p, 1, s}.is_open(0, 0)) return s;
    }
}

}  // namespace

TEST_CASE("a closed origin leaves every level dry", "[percolation]") {
    const OrientedLattice lat{0.5, 20, closed_origin_seed(0.5)};
    const auto wet = simulate_wet(lat);
    REQUIRE(wet.depth() == 20);
    for (int n = 0; n <= 20; ++n) REQUIRE_FALSE(wet.survives_to(n));
    for (auto v : final_wet_level(lat)) REQUIRE(v == 0);
}

TEST_CASE("p_S = 1 wets the whole light cone", "[percolation]") {
    for (int w : {0, 4}) {
        const OrientedLattice lat{1.0, 15, 3};
        const auto wet = simulate_wet(lat, {w});
        for (int n = 0; n <= 15; ++n) {
            std::vector<std::int32_t> cone;
            for (int y = -(n + w); y <= n + w; y += 2) cone.push_back(y);
            REQUIRE(wet.level(n) == cone);
        }
        const auto dense = final_wet_level(lat, {w});
        REQUIRE(dense.size() == static_cast<std::size_t>(15 + w) + 1);
        for (auto v : dense) REQUIRE(v == 1);
    }
}

TEST_CASE("wet sets match breadth-first reachability", "[percolation]") {
    for (double p : {0.55, 0.65, 0.8, 0.95}) {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            for (int w : {0, 2}) {
                const OrientedLattice lat{p, 30, seed};
                const auto wet = simulate_wet(lat, {w});
                const auto bfs = bfs_wet(lat, w);
                for (int n = 0; n <= 30; ++n) {
                    const std::set<std::int32_t> got(wet.level(n).begin(), wet.level(n).end());
                    REQUIRE(got == bfs[static_cast<std::size_t>(n)]);
                }
                const auto dense = final_wet_level(lat, {w});
                std::set<std::int32_t> from_dense;
                for (std::size_t i = 0; i < dense.size(); ++i) {
                    if (dense[i]) from_dense.insert(2 * static_cast<std::int32_t>(i) - (30 + w));
                }
                REQUIRE(from_dense == bfs[30]);
            }
        }
    }
}

TEST_CASE("survival frequency matches an independent transfer matrix", "[percolation][statistics]") {
    constexpr int seeds = 10000;
    constexpr double p = 0.9;
    constexpr int depth = 50;
    int ours = 0, bfs = 0, theirs = 0;
    std::mt19937_64 rng(12345);
    for (int s = 0; s < seeds; ++s) {
        const OrientedLattice lat{p, depth, static_cast<std::uint64_t>(s)};
        const bool survives = simulate_wet(lat).survives_to(depth);
        ours += survives;
        bfs += !bfs_wet(lat)[depth].empty();
        theirs += transfer_matrix_survives(rng, p, depth);
    }
    REQUIRE(ours == bfs);
    const double p1 = static_cast<double>(ours) / seeds;
    const double p2 = static_cast<double>(theirs) / seeds;
    const double pooled = 0.5 * (p1 + p2);
    REQUIRE(std::abs(p1 - p2) < 3.0 * std::sqrt(pooled * (1 - pooled) * 2.0 / seeds));
    REQUIRE(p1 > 0.5);
}

TEST_CASE("wet sets grow with p_S on shared uniforms", "[percolation][property]") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        std::vector<std::uint8_t> prev;
        for (double p : {0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
            const auto cur = final_wet_level({p, 40, seed});
            if (!prev.empty()) {
                for (std::size_t i = 0; i < cur.size(); ++i) REQUIRE(prev[i] <= cur[i]);
            }
            prev = cur;
        }
    }
}

TEST_CASE("source validation", "[percolation]") {
    REQUIRE_THROWS_AS(simulate_wet({0.9, 5, 1}, {3}), ParameterError);
    REQUIRE_THROWS_AS(simulate_wet({0.9, 5, 1}, {-2}), ParameterError);
    REQUIRE_THROWS_AS(simulate_wet({1.5, 5, 1}), ParameterError);
    REQUIRE_THROWS_AS(simulate_wet({0.9, -1, 1}), ParameterError);
}

TEST_CASE("point placement", "[percolation]") {
    for (Placement pl : {Placement::even, Placement::left, Placement::right, Placement::center}) {
        REQUIRE(placement_from_string(to_string(pl)) == pl);
        for (int n : {1, 7, 10, 31, 60}) {
            const auto pts = place_points(n, 0.5, 0.5, pl);
            REQUIRE(pts.size() == static_cast<std::size_t>(std::floor(0.5 * n)));
            for (auto y : pts) {
                REQUIRE((y + n) % 2 == 0);
                REQUIRE(std::abs(y) <= 0.5 * n + 1e-9);
            }
        }
    }
    REQUIRE(place_points(0, 0.5, 0.5, Placement::even).empty());
    REQUIRE(place_points(10, 0.5, 0.5, Placement::left).front() == -4);
    REQUIRE(place_points(10, 0.5, 0.5, Placement::right).front() == 4);
    REQUIRE_THROWS_AS(placement_from_string("middle"), ParameterError);
}

TEST_CASE("a forced wet site with certain thinning never escapes joining", "[percolation]") {
    for (int n : {2, 10, 40}) {
        const std::vector<std::int32_t> x(static_cast<std::size_t>(n / 2), 0);
        const auto trial = eq3_trial({1.0, n, 1}, {1.0, n, 2}, x, x, 1.0, 3);
        REQUIRE(trial.both_survive);
        REQUIRE(trial.joined);
        REQUIRE_FALSE(trial.event());
    }
}

TEST_CASE("eq3 events shrink as p' grows on shared uniforms", "[percolation][property]") {
    const auto pts = place_points(30, 0.5, 0.5, Placement::even);
    for (std::uint64_t t = 0; t < 1000; ++t) {
        const auto s = eq3_seeds(99, 30, t);
        const OrientedLattice k{0.95, 30, s.lattice}, kt{0.95, 30, s.lattice_tilde};
        bool prev = true;
        for (double pp : {0.1, 0.3, 0.5, 0.7, 1.0}) {
            const bool ev = eq3_trial(k, kt, pts, pts, pp, s.thinning).event();
            REQUIRE((prev || !ev));
            prev = ev;
        }
    }
}

TEST_CASE("eq3 trials validate their inputs", "[percolation]") {
    const std::vector<std::int32_t> a{0, 2}, b{0};
    REQUIRE_THROWS_AS(eq3_trial({0.9, 4, 1}, {0.9, 4, 2}, a, b, 0.3, 1), ParameterError);
    REQUIRE_THROWS_AS(eq3_trial({0.9, 4, 1}, {0.9, 5, 2}, b, b, 0.3, 1), ParameterError);

    Eq3Params params;
    params.trials = 0;
    REQUIRE_THROWS_AS(params.validate(), ParameterError);
    REQUIRE_THROWS_AS(eq3_experiment(params, 1), ParameterError);
    params = {};
    params.a = 1.0;
    REQUIRE_THROWS_AS(params.validate(), ParameterError);
    params = {};
    params.p_thin = 0.0;
    REQUIRE_THROWS_AS(params.validate(), ParameterError);
}

TEST_CASE("eq3 estimates are deterministic across worker counts", "[percolation]") {
    Eq3Params params;
    params.n_grid = {10, 20};
    params.trials = 2000;
    const auto a = eq3_experiment(params, 5, 1);
    const auto b = eq3_experiment(params, 5, 3);
    REQUIRE(a.grid.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) REQUIRE(a.grid[i].count == b.grid[i].count);
    REQUIRE(a.slope == b.slope);
    REQUIRE(a.grid[0].count > a.grid[1].count);
}
