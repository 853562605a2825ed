#include "conecouple/percolation.hpp"

#include "conecouple/error.hpp"
#include "conecouple/parallel.hpp"
#include "conecouple/random.hpp"

#include <algorithm>
#include <cmath>

namespace conecouple {

void OrientedLattice::validate() const {
    if (!(p_open >= 0.0 && p_open <= 1.0)) throw ParameterError("p_S must lie in [0, 1]");
    if (depth < 0) throw ParameterError("lattice depth must be >= 0");
}

bool OrientedLattice::is_open(std::int64_t y, std::int64_t n) const noexcept {
    return keyed_uniform(seed, {key_of(y), key_of(n)}) < p_open;
}

bool WetSet::contains(std::int64_t y, int n) const {
    const auto& lv = level(n);
    return std::binary_search(lv.begin(), lv.end(), static_cast<std::int32_t>(y));
}

namespace {

void check_source(WetSource source) {
    if (source.half_width < 0 || source.half_width % 2 != 0) {
        throw ParameterError("source half-width must be even and >= 0");
    }
}

// Cells of level n cover y in [-(n+w), n+w] with parity of n+w; wet[i] <-> y = 2i - (n+w).
std::vector<std::uint8_t> source_level(const OrientedLattice& lattice, int w) {
    std::vector<std::uint8_t> wet(static_cast<std::size_t>(w) + 1, 0);
    for (int i = 0; i <= w; ++i) {
        wet[static_cast<std::size_t>(i)] = lattice.is_open(2 * i - w, 0);
    }
    return wet;
}

// Advances level n (offset n+w) to level n+1 (offset n+1+w) in place of `next`.
bool step_level(const OrientedLattice& lattice, int n, int w, const std::vector<std::uint8_t>& cur,
                std::vector<std::uint8_t>& next) {
    const int off_next = n + 1 + w;
    next.assign(cur.size() + 1, 0);
    bool any = false;
    for (std::size_t i = 0; i < next.size(); ++i) {
        // y' = 2i - off_next has neighbours y'-1 (cell i-1) and y'+1 (cell i) at level n.
        const bool left = i > 0 && cur[i - 1];
        const bool right = i < cur.size() && cur[i];
        if (!(left || right)) continue;
        const int y = 2 * static_cast<int>(i) - off_next;
        if (lattice.is_open(y, n + 1)) {
            next[i] = 1;
            any = true;
        }
    }
    return any;
}

}  // namespace

WetSet simulate_wet(const OrientedLattice& lattice, WetSource source) {
    lattice.validate();
    check_source(source);
    const int w = source.half_width;
    WetSet out;
    out.levels_.resize(static_cast<std::size_t>(lattice.depth) + 1);
    std::vector<std::uint8_t> cur = source_level(lattice, w);
    std::vector<std::uint8_t> next;
    for (int n = 0;; ++n) {
        auto& lv = out.levels_[static_cast<std::size_t>(n)];
        for (std::size_t i = 0; i < cur.size(); ++i) {
            if (cur[i]) lv.push_back(2 * static_cast<std::int32_t>(i) - (n + w));
        }
        if (n == lattice.depth || lv.empty()) break;
        step_level(lattice, n, w, cur, next);
        cur.swap(next);
    }
    return out;
}

std::vector<std::uint8_t> final_wet_level(const OrientedLattice& lattice, WetSource source) {
    lattice.validate();
    check_source(source);
    const int w = source.half_width;
    std::vector<std::uint8_t> cur = source_level(lattice, w);
    std::vector<std::uint8_t> next;
    bool alive = std::any_of(cur.begin(), cur.end(), [](std::uint8_t v) { return v != 0; });
    for (int n = 0; n < lattice.depth; ++n) {
        if (!alive) {
            cur.assign(cur.size() + static_cast<std::size_t>(lattice.depth - n), 0);
            return cur;
        }
        alive = step_level(lattice, n, w, cur, next);
        cur.swap(next);
    }
    return cur;
}

const char* to_string(Placement placement) noexcept {
    switch (placement) {
        case Placement::even: return "even";
        case Placement::left: return "left";
        case Placement::right: return "right";
        case Placement::center: return "center";
    }
    return "?";
}

Placement placement_from_string(const std::string& name) {
    for (Placement p : {Placement::even, Placement::left, Placement::right, Placement::center}) {
        if (name == to_string(p)) return p;
    }
    throw ParameterError("unknown placement '" + name + "' (expected even, left, right or center)");
}

std::vector<std::int32_t> place_points(int n, double c, double a, Placement placement) {
    if (n < 0) throw ParameterError("level must be >= 0");
    const auto count = static_cast<std::size_t>(std::floor(c * n));
    const double reach = a * n;
    std::vector<std::int32_t> candidates;
    for (int y = -n; y <= n; y += 2) {
        if (std::abs(y) <= reach + 1e-9) candidates.push_back(y);
    }
    std::vector<std::int32_t> out;
    if (count == 0 || candidates.empty()) return out;
    out.reserve(count);
    const std::size_t size = candidates.size();
    for (std::size_t k = 0; k < count; ++k) {
        std::size_t idx = 0;
        switch (placement) {
            case Placement::even:
                idx = static_cast<std::size_t>((static_cast<double>(k) + 0.5) * static_cast<double>(size) /
                                               static_cast<double>(count));
                break;
            case Placement::left: idx = std::min(k, size - 1); break;
            case Placement::right: idx = size - 1 - std::min(k, size - 1); break;
            case Placement::center: {
                const std::size_t start = size > count ? (size - count) / 2 : 0;
                idx = std::min(start + k, size - 1);
                break;
            }
        }
        out.push_back(candidates[std::min(idx, size - 1)]);
    }
    return out;
}

void Eq3Params::validate() const {
    if (!(p_open > 0.0 && p_open <= 1.0)) throw ParameterError("p_S must lie in (0, 1]");
    if (!(c > 0.0)) throw ParameterError("c must be > 0");
    if (!(a > 0.0 && a < 1.0)) throw ParameterError("a must lie in (0, 1)");
    if (!(p_thin > 0.0 && p_thin <= 1.0)) throw ParameterError("p' must lie in (0, 1]");
    if (trials == 0) throw ParameterError("trials must be > 0");
    if (n_grid.empty()) throw ParameterError("n grid is empty");
    for (int n : n_grid) {
        if (n < 1) throw ParameterError("n grid entries must be >= 1");
    }
    check_source(source);
}

Eq3Trial eq3_trial(const OrientedLattice& k, const OrientedLattice& k_tilde, const std::vector<std::int32_t>& x,
                   const std::vector<std::int32_t>& x_tilde, double p_thin, std::uint64_t thin_seed,
                   WetSource source) {
    if (x.size() != x_tilde.size()) throw ParameterError("point sets must have equal size");
    if (k.depth != k_tilde.depth) throw ParameterError("lattices must share depth");
    const auto wet = final_wet_level(k, source);
    const auto wet_tilde = final_wet_level(k_tilde, source);
    const int off = k.depth + source.half_width;
    auto is_wet = [off](const std::vector<std::uint8_t>& level, std::int32_t y) {
        const int shifted = y + off;
        if (shifted < 0 || shifted % 2 != 0) return false;
        const auto i = static_cast<std::size_t>(shifted / 2);
        return i < level.size() && level[i] != 0;
    };
    Eq3Trial out;
    out.both_survive = std::any_of(wet.begin(), wet.end(), [](std::uint8_t v) { return v != 0; }) &&
                       std::any_of(wet_tilde.begin(), wet_tilde.end(), [](std::uint8_t v) { return v != 0; });
    for (std::size_t i = 0; i < x.size() && !out.joined; ++i) {
        if (is_wet(wet, x[i]) && is_wet(wet_tilde, x_tilde[i]) && keyed_uniform(thin_seed, {i}) < p_thin) {
            out.joined = true;
        }
    }
    return out;
}

Eq3Seeds eq3_seeds(std::uint64_t master, int n, std::uint64_t trial) {
    const auto base = derive_seed(master, {0x657133ULL, key_of(n), trial});
    return {derive_seed(base, {0}), derive_seed(base, {1}), derive_seed(base, {2})};
}

DecayFit eq3_experiment(const Eq3Params& params, std::uint64_t seed, unsigned workers, double confidence) {
    params.validate();
    std::vector<DecayPoint> grid;
    for (int n : params.n_grid) {
        const auto points = place_points(n, params.c, params.a, params.placement);
        auto flags = parallel_map(params.trials, workers, [&](std::size_t trial) -> std::uint8_t {
            const auto s = eq3_seeds(seed, n, trial);
            const OrientedLattice k{params.p_open, n, s.lattice};
            const OrientedLattice kt{params.p_open, n, s.lattice_tilde};
            return eq3_trial(k, kt, points, points, params.p_thin, s.thinning, params.source).event();
        });
        const auto count = static_cast<std::uint64_t>(std::count(flags.begin(), flags.end(), 1));
        grid.push_back(decay_point(n, count, params.trials));
    }
    return fit_log_linear(std::move(grid), confidence);
}

}  // namespace conecouple
