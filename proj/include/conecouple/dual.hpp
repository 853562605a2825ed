#pragma once

#include "conecouple/engine.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace conecouple {

/// Dual from the space-time point (apex_site, 2 * half_time), run down to
/// level half_time on the reversed arrows of (half_time, 2 * half_time].
struct DualSpec {
    std::int32_t apex_site = 0;
    double half_time = 0.0;
};

/// xi~^x_s for s in [0, half_time], replayed by the engine on the reversed
/// segment under vacant-outside. The reversed log carries the mirrored
/// kernel mu_i -> mu_{-i}.
Trajectory build_dual(const EventLog& log, const DualSpec& spec);

/// Duals from several apex sites at the same level, sharing one reversal.
std::vector<Trajectory> build_duals(const EventLog& log, double half_time, std::span<const std::int32_t> apex_sites);

struct DualityResult {
    bool holds = true;            ///< forward_hit == dual_meets
    bool certified = true;        ///< neither replay came within M of the window edge
    bool forward_hit = false;     ///< xi^A_{2t}(x) = 1
    bool dual_meets = false;      ///< xi^A_t meets xi~^x_t
};

/// Per-realization duality: [xi^A_{2t}(x) = 1] iff [xi^A_t cap xi~^x_t != {}].
/// Uncertified results are flagged, not rejected.
DualityResult duality_check(const EventLog& log, const Configuration& initial, const DualSpec& spec);

}  // namespace conecouple
