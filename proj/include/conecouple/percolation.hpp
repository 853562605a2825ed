#pragma once

#include "conecouple/estimators.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace conecouple {

/// Oriented site percolation on {(y, n) : y + n even, 0 <= n <= depth}.
/// Site (y, n) is open iff its keyed uniform is below p_open, so lattices
/// sharing a seed are coupled monotonically in p_open.
struct OrientedLattice {
    double p_open = 0.95;
    int depth = 0;
    std::uint64_t seed = 0;

    void validate() const;
    bool is_open(std::int64_t y, std::int64_t n) const noexcept;
};

/// Level-0 source: open sites (y, 0) with y even and |y| <= half_width.
/// half_width must be even; 0 is the origin.
struct WetSource {
    int half_width = 0;
};

/// K_n for n = 0..depth; each level lists its wet y in increasing order.
class WetSet {
public:
    int depth() const noexcept { return static_cast<int>(levels_.size()) - 1; }
    const std::vector<std::int32_t>& level(int n) const { return levels_.at(static_cast<std::size_t>(n)); }
    bool contains(std::int64_t y, int n) const;
    bool survives_to(int n) const { return !level(n).empty(); }

private:
    friend WetSet simulate_wet(const OrientedLattice&, WetSource);
    std::vector<std::vector<std::int32_t>> levels_;
};

/// Level-by-level reachability: (y, n+1) is wet iff open and (y-1, n) or (y+1, n) is wet.
WetSet simulate_wet(const OrientedLattice& lattice, WetSource source = {});

/// Dense K_depth: cell (y + depth + half_width) / 2 marks y wet. Only opens
/// sites next to wet ones, so dying clusters are cheap.
std::vector<std::uint8_t> final_wet_level(const OrientedLattice& lattice, WetSource source = {});

enum class Placement : std::uint8_t { even, left, right, center };

const char* to_string(Placement placement) noexcept;
Placement placement_from_string(const std::string& name);

/// floor(c n) level-n sites of parity n with |y| <= a n, chosen by `placement`.
/// Sites repeat when floor(c n) exceeds the number of candidates.
std::vector<std::int32_t> place_points(int n, double c, double a, Placement placement);

struct Eq3Params {
    double p_open = 0.95;
    double c = 0.5;
    double a = 0.5;
    double p_thin = 0.3;  ///< p'
    std::vector<int> n_grid{10, 20, 30, 40, 50, 60};
    std::uint64_t trials = 100000;
    WetSource source;
    Placement placement = Placement::even;

    void validate() const;
};

/// One trial at level n with explicit point sets (equal sizes).
struct Eq3Trial {
    bool both_survive = false;
    bool joined = false;  ///< some thinned E'_k occurred

    bool event() const noexcept { return both_survive && !joined; }
};

Eq3Trial eq3_trial(const OrientedLattice& k, const OrientedLattice& k_tilde, const std::vector<std::int32_t>& x,
                   const std::vector<std::int32_t>& x_tilde, double p_thin, std::uint64_t thin_seed,
                   WetSource source = {});

/// Seeds of trial `trial` at level n: K, K~, thinning.
struct Eq3Seeds {
    std::uint64_t lattice;
    std::uint64_t lattice_tilde;
    std::uint64_t thinning;
};
Eq3Seeds eq3_seeds(std::uint64_t master, int n, std::uint64_t trial);

/// Estimates P(no E'_k, K_n != {}, K~_n != {}) on each grid level and fits
/// log-linear decay in n.
DecayFit eq3_experiment(const Eq3Params& params, std::uint64_t seed, unsigned workers = 0,
                        double confidence = 0.95);

}  // namespace conecouple
