#include "conecouple/dual.hpp"

#include "conecouple/error.hpp"

namespace conecouple {

namespace {

void validate(const EventLog& log, const DualSpec& spec) {
    if (!(spec.half_time >= 0.0)) throw ParameterError("dual half_time must be >= 0");
    if (2.0 * spec.half_time > log.window().t_max) throw ParameterError("dual needs 2t <= log t_max");
    if (!log.window().contains_site(spec.apex_site)) throw ParameterError("dual apex outside the log window");
}

bool contact_by(const Trajectory& traj, double t) {
    return traj.boundary_contact_time() && *traj.boundary_contact_time() <= t;
}

}  // namespace

std::vector<Trajectory> build_duals(const EventLog& log, double half_time, std::span<const std::int32_t> apex_sites) {
    for (std::int32_t x : apex_sites) validate(log, DualSpec{x, half_time});
    const auto& window = log.window();
    const EventLog reversed =
        half_time == 0.0
            ? EventLog::from_events(log.kernel().mirrored(), SpaceTimeWindow{window.x_min, window.x_max, 0.0},
                                    log.seed(), {}, LogProvenance::reversed)
            : reverse_segment(log, half_time, 2.0 * half_time);
    std::vector<Trajectory> out;
    out.reserve(apex_sites.size());
    for (std::int32_t x : apex_sites) {
        out.push_back(evolve(reversed, Configuration::from_sites(reversed.window(), {x}),
                             BoundaryPolicy::vacant_outside, reversed.window().t_max));
    }
    return out;
}

Trajectory build_dual(const EventLog& log, const DualSpec& spec) {
    const std::int32_t apex[] = {spec.apex_site};
    return std::move(build_duals(log, spec.half_time, apex).front());
}

DualityResult duality_check(const EventLog& log, const Configuration& initial, const DualSpec& spec) {
    validate(log, spec);
    const double t = spec.half_time;
    const Trajectory forward = evolve(log, initial, BoundaryPolicy::vacant_outside, 2.0 * t);
    const Trajectory dual = build_dual(log, spec);

    DualityResult result;
    result.forward_hit = forward.final_state().occupied(spec.apex_site);
    result.dual_meets = forward.state_at(t).intersects(dual.final_state());
    result.holds = result.forward_hit == result.dual_meets;
    result.certified = !contact_by(forward, 2.0 * t) && !contact_by(dual, t);
    return result;
}

}  // namespace conecouple
