#include "conecouple/engine.hpp"

#include "conecouple/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace conecouple {

// ---------------------------------------------------------------------------
// Configuration

Configuration::Configuration(const SpaceTimeWindow& window)
    : x_min_(window.x_min), x_max_(window.x_max), occ_(window.site_count(), 0) {
    if (window.x_min > window.x_max) throw ParameterError("configuration window requires x_min <= x_max");
}

Configuration Configuration::full(const SpaceTimeWindow& window) {
    Configuration c(window);
    std::fill(c.occ_.begin(), c.occ_.end(), std::uint8_t{1});
    c.count_ = c.occ_.size();
    return c;
}

Configuration Configuration::from_cells(std::int32_t x_min, std::vector<std::uint8_t> cells) {
    if (cells.empty()) throw ParameterError("configuration needs at least one site");
    Configuration c(SpaceTimeWindow{x_min, x_min + static_cast<std::int32_t>(cells.size()) - 1, 0.0});
    c.count_ = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        cells[i] = cells[i] != 0;
        c.count_ += cells[i];
    }
    c.occ_ = std::move(cells);
    return c;
}

Configuration Configuration::from_sites(const SpaceTimeWindow& window, std::span<const std::int32_t> sites) {
    Configuration c(window);
    for (std::int32_t x : sites) c.set(x, true);
    return c;
}

void Configuration::set(std::int32_t x, bool value) {
    if (x < x_min_ || x > x_max_) throw ParameterError("site " + std::to_string(x) + " outside configuration window");
    auto& cell = occ_[static_cast<std::size_t>(x - x_min_)];
    if ((cell != 0) == value) return;
    cell = value ? 1 : 0;
    if (value) {
        ++count_;
    } else {
        --count_;
    }
}

std::vector<std::int32_t> Configuration::sites() const {
    std::vector<std::int32_t> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < occ_.size(); ++i) {
        if (occ_[i]) out.push_back(x_min_ + static_cast<std::int32_t>(i));
    }
    return out;
}

std::optional<std::int32_t> Configuration::leftmost() const {
    for (std::size_t i = 0; i < occ_.size(); ++i) {
        if (occ_[i]) return x_min_ + static_cast<std::int32_t>(i);
    }
    return std::nullopt;
}

std::optional<std::int32_t> Configuration::rightmost() const {
    for (std::size_t i = occ_.size(); i-- > 0;) {
        if (occ_[i]) return x_min_ + static_cast<std::int32_t>(i);
    }
    return std::nullopt;
}

bool Configuration::subset_of(const Configuration& other) const {
    if (!same_sites_as(other)) throw ParameterError("configurations over different windows");
    for (std::size_t i = 0; i < occ_.size(); ++i) {
        if (occ_[i] && !other.occ_[i]) return false;
    }
    return true;
}

Configuration Configuration::united(const Configuration& other) const {
    if (!same_sites_as(other)) throw ParameterError("configurations over different windows");
    Configuration out(*this);
    out.count_ = 0;
    for (std::size_t i = 0; i < occ_.size(); ++i) {
        out.occ_[i] = (occ_[i] | other.occ_[i]) ? 1 : 0;
        out.count_ += out.occ_[i];
    }
    return out;
}

bool Configuration::intersects(const Configuration& other) const {
    if (!same_sites_as(other)) throw ParameterError("configurations over different windows");
    for (std::size_t i = 0; i < occ_.size(); ++i) {
        if (occ_[i] && other.occ_[i]) return true;
    }
    return false;
}

const char* to_string(BoundaryPolicy policy) noexcept {
    switch (policy) {
        case BoundaryPolicy::vacant_outside: return "vacant_outside";
        case BoundaryPolicy::frozen_occupied_outside: return "frozen_occupied_outside";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Trajectory

Configuration Trajectory::state_after(std::size_t delta_count) const {
    if (delta_count > deltas_.size()) throw ParameterError("delta index beyond trajectory");
    if (delta_count == deltas_.size()) return final_;
    Configuration state = initial_;
    for (std::size_t i = 0; i < delta_count; ++i) state.set(deltas_[i].site, deltas_[i].value != 0);
    return state;
}

Configuration Trajectory::state_at(double t) const {
    const auto it = std::upper_bound(deltas_.begin(), deltas_.end(), t,
                                     [](double time, const Delta& d) { return time < d.time; });
    return state_after(static_cast<std::size_t>(it - deltas_.begin()));
}

std::optional<EdgeSample> Trajectory::edges_at(double t) const {
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), t,
                                     [](double time, const EdgeSample& e) { return time < e.time; });
    if (it == edges_.begin()) return std::nullopt;
    const EdgeSample& sample = *std::prev(it);
    if (!sample.alive) return std::nullopt;
    return sample;
}

// ---------------------------------------------------------------------------
// Replay

namespace {

class Replayer {
public:
    Replayer(const Configuration& initial, int range, bool track_edges)
        : occ_(initial.raw().begin(), initial.raw().end()),
          x_min_(initial.x_min()),
          x_max_(initial.x_max()),
          count_(initial.count()),
          range_(range),
          track_edges_(track_edges) {}

    void start(double t, std::vector<EdgeSample>& edges, std::optional<double>& extinction,
               std::optional<double>& contact) {
        if (count_ == 0) {
            extinction = t;
            return;
        }
        std::int32_t left = x_max_;
        std::int32_t right = x_min_;
        for (std::int32_t x = x_min_; x <= x_max_; ++x) {
            if (!occupied(x)) continue;
            left = std::min(left, x);
            right = std::max(right, x);
            if (!contact && in_contact_zone(x)) contact = t;
        }
        l_ = left;
        r_ = right;
        L_ = left;
        R_ = right;
        seen_ = true;
        if (track_edges_) edges.push_back({t, l_, r_, L_, R_, true});
    }

    bool occupied(std::int32_t x) const noexcept { return occ_[static_cast<std::size_t>(x - x_min_)] != 0; }

    bool in_contact_zone(std::int32_t x) const noexcept { return x - x_min_ < range_ || x_max_ - x < range_; }

    void occupy(std::int32_t x, double t, std::vector<Delta>& deltas,
                std::vector<EdgeSample>& edges, std::optional<double>& extinction, std::optional<double>& contact) {
        occ_[static_cast<std::size_t>(x - x_min_)] = 1;
        deltas.push_back({t, x, 1});
        if (!contact && in_contact_zone(x)) contact = t;
        bool moved = true;
        if (count_++ == 0) {
            extinction.reset();
            l_ = r_ = x;
            if (!seen_) L_ = R_ = x;
            seen_ = true;
        } else if (x < l_) {
            l_ = x;
        } else if (x > r_) {
            r_ = x;
        } else {
            moved = false;
        }
        L_ = std::min(L_, l_);
        R_ = std::max(R_, r_);
        if (track_edges_ && moved) push_edge(t, edges, true);
    }

    void vacate(std::int32_t x, double t, std::vector<Delta>& deltas, std::vector<EdgeSample>& edges,
                std::optional<double>& extinction) {
        occ_[static_cast<std::size_t>(x - x_min_)] = 0;
        deltas.push_back({t, x, 0});
        if (--count_ == 0) {
            extinction = t;
            if (track_edges_) push_edge(t, edges, false);
            return;
        }
        bool moved = false;
        if (x == r_) {
            while (!occupied(r_)) --r_;
            moved = true;
        }
        if (x == l_) {
            while (!occupied(l_)) ++l_;
            moved = true;
        }
        if (track_edges_ && moved) push_edge(t, edges, true);
    }

    std::vector<std::uint8_t> take_cells() { return std::move(occ_); }

private:
    void push_edge(double t, std::vector<EdgeSample>& edges, bool alive) {
        edges.push_back({t, l_, r_, L_, R_, alive});
    }

    std::vector<std::uint8_t> occ_;
    std::int32_t x_min_;
    std::int32_t x_max_;
    std::size_t count_;
    int range_;
    bool track_edges_;
    std::int32_t l_ = 0;
    std::int32_t r_ = 0;
    std::int32_t L_ = 0;
    std::int32_t R_ = 0;
    bool seen_ = false;
};

}  // namespace

Trajectory evolve(const EventLog& log, const Configuration& initial, BoundaryPolicy boundary, double t_start,
                  double t_end) {
    const auto& window = log.window();
    if (initial.x_min() != window.x_min || initial.x_max() != window.x_max) {
        throw ParameterError("initial configuration does not match the log window");
    }
    if (!(t_start >= 0.0) || t_start > t_end) throw ParameterError("evolve requires 0 <= t_start <= t_end");
    if (t_end > window.t_max) {
        throw ParameterError("t_end " + std::to_string(t_end) + " exceeds log horizon " + std::to_string(window.t_max));
    }
    const bool frozen = boundary == BoundaryPolicy::frozen_occupied_outside;
    std::vector<Event> outside;
    if (frozen) outside = boundary_arrows(log, t_end);

    Trajectory traj(initial, boundary, log.fingerprint(), t_start, t_end);
    traj.tracks_edges_ = !initial.is_full();
    Replayer rep(initial, log.kernel().range(), traj.tracks_edges_);
    rep.start(t_start, traj.edges_, traj.extinction_time_, traj.boundary_contact_time_);

    auto events = log.events();
    auto by_time = [](const Event& e, double t) { return e.time <= t; };
    auto it = std::partition_point(events.begin(), events.end(), [&](const Event& e) { return by_time(e, t_start); });
    auto ob = std::partition_point(outside.begin(), outside.end(), [&](const Event& e) { return by_time(e, t_start); });
    const auto end = events.end();
    const auto oend = outside.end();
    const std::int32_t x_min = window.x_min;
    const std::int32_t x_max = window.x_max;

    traj.deltas_.reserve(log.size() / 2 + 16);
    while (true) {
        const Event* e = nullptr;
        if (it != end && (ob == oend || event_before(*it, *ob))) {
            e = &*it++;
        } else if (ob != oend) {
            e = &*ob++;
        } else {
            break;
        }
        if (e->time > t_end) break;
        if (e->is_death()) {
            if (rep.occupied(e->source)) {
                rep.vacate(e->source, e->time, traj.deltas_, traj.edges_, traj.extinction_time_);
            }
            continue;
        }
        const std::int32_t target = e->target();
        const bool source_inside = e->source >= x_min && e->source <= x_max;
        const bool source_occupied = source_inside ? rep.occupied(e->source) : frozen;
        if (source_occupied && !rep.occupied(target)) {
            rep.occupy(target, e->time, traj.deltas_, traj.edges_, traj.extinction_time_,
                       traj.boundary_contact_time_);
        }
    }
    traj.final_ = Configuration::from_cells(x_min, rep.take_cells());
    return traj;
}

std::vector<Trajectory> coupled_evolve(const EventLog& log, std::span<const Configuration> initials,
                                       std::span<const BoundaryPolicy> boundaries, double t_end) {
    if (boundaries.size() != initials.size() && boundaries.size() != 1) {
        throw ParameterError("coupled_evolve needs one boundary policy per initial (or a single shared one)");
    }
    for (const auto& c : initials) {
        if (c.x_min() != log.window().x_min || c.x_max() != log.window().x_max) {
            throw ParameterError("coupled_evolve: initial configurations must share the log window");
        }
    }
    std::vector<Trajectory> out;
    out.reserve(initials.size());
    for (std::size_t i = 0; i < initials.size(); ++i) {
        out.push_back(evolve(log, initials[i], boundaries.size() == 1 ? boundaries[0] : boundaries[i], t_end));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cone

void ConeSpec::validate() const {
    if (!std::isfinite(alpha_hat) || !std::isfinite(beta_hat) || !std::isfinite(eps)) {
        throw ParameterError("ConeSpec: velocities and eps must be finite");
    }
    if (!(eps > 0.0)) throw ParameterError("ConeSpec: eps must be > 0");
    if (!(left_speed() < right_speed())) {
        throw ParameterError("ConeSpec: requires beta + eps < alpha - eps (beta=" + std::to_string(beta_hat) +
                             ", alpha=" + std::to_string(alpha_hat) + ", eps=" + std::to_string(eps) + ")");
    }
}

namespace {

// Absorbs one-ulp products such as 0.4 * 10 landing just below 4.
constexpr double cone_slack = 1e-9;

std::int64_t floor_slack(double v) { return static_cast<std::int64_t>(std::floor(v + cone_slack * std::max(1.0, std::abs(v)))); }
std::int64_t ceil_slack(double v) { return static_cast<std::int64_t>(std::ceil(v - cone_slack * std::max(1.0, std::abs(v)))); }

}  // namespace

IntegerInterval cone_interval(const ConeSpec& spec, double t) {
    return {ceil_slack(spec.left_speed() * t), floor_slack(spec.right_speed() * t)};
}

// ---------------------------------------------------------------------------
// Agreement

namespace {

void crossing_times(double speed, double t_from, double t_end, std::vector<double>& out) {
    if (speed == 0.0) return;
    const double a = speed * t_from;
    const double b = speed * t_end;
    const auto lo = static_cast<std::int64_t>(std::floor(std::min(a, b)));
    const auto hi = static_cast<std::int64_t>(std::ceil(std::max(a, b)));
    for (std::int64_t k = lo; k <= hi; ++k) {
        const double t = static_cast<double>(k) / speed;
        if (t > t_from && t < t_end) out.push_back(t);
    }
}

}  // namespace

AgreementResult agreement_on_cone(const Trajectory& a, const Trajectory& b, const ConeSpec& spec, double t_end,
                                  double t_from) {
    if (a.log_fingerprint() != b.log_fingerprint()) throw ParameterError("agreement_on_cone: trajectories from different logs");
    if (!a.initial().same_sites_as(b.initial())) throw ParameterError("agreement_on_cone: different windows");
    if (a.t_start() != b.t_start()) throw ParameterError("agreement_on_cone: trajectories start at different times");
    if (t_end > a.t_end() || t_end > b.t_end()) throw ParameterError("agreement_on_cone: t_end beyond a trajectory horizon");
    if (t_from < a.t_start() || t_from > t_end) throw ParameterError("agreement_on_cone: need t_start <= t_from <= t_end");

    const std::int32_t x_min = a.initial().x_min();
    const std::int32_t x_max = a.initial().x_max();
    const std::size_t n = a.initial().site_count();
    std::vector<std::uint8_t> sa(a.initial().raw().begin(), a.initial().raw().end());
    std::vector<std::uint8_t> sb(b.initial().raw().begin(), b.initial().raw().end());
    std::vector<std::uint8_t> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = sa[i] != sb[i];

    // Sites of the cone clipped to the window, as indices into diff.
    auto clip = [&](const IntegerInterval& cone) {
        return IntegerInterval{std::max<std::int64_t>(cone.lo, x_min) - x_min,
                               std::min<std::int64_t>(cone.hi, x_max) - x_min};
    };
    auto count_in = [&](const IntegerInterval& idx) {
        int c = 0;
        for (std::int64_t i = idx.lo; i <= idx.hi; ++i) c += diff[static_cast<std::size_t>(i)];
        return c;
    };

    // `open_set` is the cone's integer set on the open stretch after the
    // current time; `open_count` the number of differing sites in it.
    IntegerInterval open_set;
    int open_count = 0;

    auto da = a.deltas();
    auto db = b.deltas();
    std::size_t ia = 0;
    std::size_t ib = 0;
    auto apply = [&](std::vector<std::uint8_t>& mine, const std::vector<std::uint8_t>& other, const Delta& d) {
        const auto i = static_cast<std::size_t>(d.site - x_min);
        mine[i] = d.value;
        const std::uint8_t now = mine[i] != other[i];
        if (now != diff[i]) {
            diff[i] = now;
            if (open_set.contains(static_cast<std::int64_t>(i))) open_count += now ? 1 : -1;
        }
    };
    auto apply_through = [&](double t) {
        while (ia < da.size() && da[ia].time <= t) apply(sa, sb, da[ia++]);
        while (ib < db.size() && db[ib].time <= t) apply(sb, sa, db[ib++]);
    };

    std::vector<double> crossings;
    crossing_times(spec.left_speed(), t_from, t_end, crossings);
    crossing_times(spec.right_speed(), t_from, t_end, crossings);
    std::sort(crossings.begin(), crossings.end());
    crossings.push_back(t_end);
    std::size_t ic = 0;

    AgreementResult result;
    auto mark = [&](double inf, double sup) {
        result.holds_for_all_t = false;
        if (!result.first_disagreement_time) result.first_disagreement_time = inf;
        result.last_disagreement_time = sup;
    };
    // At a crossing instant the closed cone holds the sets on both sides.
    auto enter_crossing = [&](double t) {
        if (count_in(clip(cone_interval(spec, t))) > 0) mark(t, t);
        while (ic < crossings.size() && crossings[ic] <= t) ++ic;
        const double next = ic < crossings.size() ? crossings[ic] : t_end;
        open_set = next > t ? clip(cone_interval(spec, 0.5 * (t + next))) : IntegerInterval{};
        open_count = count_in(open_set);
    };

    apply_through(t_from);
    enter_crossing(t_from);
    double cur = t_from;
    while (cur < t_end) {
        double next = crossings[ic];
        if (ia < da.size()) next = std::min(next, da[ia].time);
        if (ib < db.size()) next = std::min(next, db[ib].time);
        if (open_count > 0) mark(cur, next);
        apply_through(next);
        if (next == crossings[ic]) {
            enter_crossing(next);
        } else if (open_count > 0) {
            mark(next, next);
        }
        cur = next;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Sandwich

Sandwich full_start_sandwich(const EventLog& log, const ConeSpec& spec, double t_end) {
    spec.validate();
    const Configuration full = Configuration::full(log.window());
    Trajectory lower = evolve(log, full, BoundaryPolicy::vacant_outside, t_end);
    Trajectory upper = evolve(log, full, BoundaryPolicy::frozen_occupied_outside, t_end);
    AgreementResult agreement = agreement_on_cone(lower, upper, spec, t_end);
    return {std::move(lower), std::move(upper), agreement};
}

bool truncation_certificate(const EventLog& log, const ConeSpec& spec, double t_end) {
    return full_start_sandwich(log, spec, t_end).agreement.holds_for_all_t;
}

std::int32_t default_half_width(const InteractionKernel& kernel, const ConeSpec& spec, double t_end,
                                std::int32_t margin) {
    if (margin < 0) throw ParameterError("window margin must be >= 0");
    const double speed = std::max(std::abs(spec.alpha_hat), std::abs(spec.beta_hat));
    return static_cast<std::int32_t>(std::ceil(speed * t_end)) + margin + kernel.range();
}

std::int32_t lightcone_half_width(const InteractionKernel& kernel, const ConeSpec& spec, double t_end) {
    const double speed = std::max(std::abs(spec.alpha_hat), std::abs(spec.beta_hat)) + kernel.total_birth_rate();
    return static_cast<std::int32_t>(std::ceil(speed * t_end)) + kernel.range();
}

}  // namespace conecouple
