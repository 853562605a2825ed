#pragma once

#include "conecouple/engine.hpp"
#include "conecouple/graphical.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

namespace testsupport {

using conecouple::ConeSpec;
using conecouple::Event;
using conecouple::EventLog;
using conecouple::Trajectory;

using SiteSet = std::set<std::int32_t>;

/// Event-by-event replay on a std::set, written independently of the engine.
/// With `frozen`, the boundary arrows are merged in and their sources count
/// as occupied.
inline SiteSet naive_replay(const EventLog& log, SiteSet state, double t_end, bool frozen = false,
                            double t_start = 0.0) {
    std::vector<Event> events(log.events().begin(), log.events().end());
    if (frozen) {
        auto extra = conecouple::boundary_arrows(log, t_end);
        events.insert(events.end(), extra.begin(), extra.end());
        std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
    }
    const auto& w = log.window();
    auto occupied = [&](std::int32_t x) {
        if (x < w.x_min || x > w.x_max) return frozen;
        return state.count(x) > 0;
    };
    for (const Event& e : events) {
        if (e.time <= t_start) continue;
        if (e.time > t_end) break;
        if (e.is_death()) {
            state.erase(e.site());
        } else if (occupied(e.source)) {
            state.insert(e.target());
        }
    }
    return state;
}

inline SiteSet as_set(const conecouple::Configuration& c) {
    auto v = c.sites();
    return {v.begin(), v.end()};
}

/// States of a trajectory at increasing `times`, built by applying its
/// deltas incrementally.
inline std::vector<std::vector<std::uint8_t>> sweep(const Trajectory& traj, const std::vector<double>& times) {
    std::vector<std::uint8_t> cells(traj.initial().raw().begin(), traj.initial().raw().end());
    const auto x0 = traj.initial().x_min();
    std::vector<std::vector<std::uint8_t>> out;
    std::size_t i = 0;
    const auto deltas = traj.deltas();
    for (double t : times) {
        while (i < deltas.size() && deltas[i].time <= t) {
            cells[static_cast<std::size_t>(deltas[i].site - x0)] = deltas[i].value;
            ++i;
        }
        out.push_back(cells);
    }
    return out;
}

/// Integers x with (beta+eps) t <= x <= (alpha-eps) t.
inline SiteSet cone_sites(const ConeSpec& cone, double t, std::int32_t lo, std::int32_t hi) {
    SiteSet out;
    for (std::int32_t x = lo; x <= hi; ++x) {
        if ((cone.beta_hat + cone.eps) * t <= x && x <= (cone.alpha_hat - cone.eps) * t) out.insert(x);
    }
    return out;
}

/// Disagreement times of two trajectories on the cone, sampled on a grid of step h.
struct GridVerdict {
    bool agrees = true;
    std::optional<double> first;
    std::optional<double> last;
};

inline GridVerdict dense_grid_agreement(const Trajectory& a, const Trajectory& b, const ConeSpec& cone, double t_end,
                                        double h) {
    GridVerdict v;
    const auto lo = a.initial().x_min();
    const auto hi = a.initial().x_max();
    const auto steps = static_cast<long>(std::floor(t_end / h + 1e-9));
    std::vector<double> times;
    for (long k = 0; k <= steps; ++k) times.push_back(static_cast<double>(k) * h);
    const auto sa = sweep(a, times);
    const auto sb = sweep(b, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        for (std::int32_t x : cone_sites(cone, t, lo, hi)) {
            const auto i = static_cast<std::size_t>(x - lo);
            if (sa[k][i] != sb[k][i]) {
                v.agrees = false;
                if (!v.first) v.first = t;
                v.last = t;
                break;
            }
        }
    }
    return v;
}

}  // namespace testsupport
