#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace conecouple {

/// Birth rates mu_j for displacements j in [-M, M] \ {0}; deaths at rate 1.
class InteractionKernel {
public:
    /// `rates` lists mu_{-M}, ..., mu_{-1}, mu_{1}, ..., mu_{M}.
    InteractionKernel(int range, std::vector<double> rates);

    /// mu_j = rate for every j with |j| <= range.
    static InteractionKernel uniform(int range, double rate);

    int range() const noexcept { return range_; }
    double rate(int displacement) const;
    double death_rate() const noexcept { return 1.0; }
    double total_birth_rate() const noexcept { return total_; }

    /// Rates in the listing order of the constructor.
    const std::vector<double>& rates() const noexcept { return rates_; }

    /// Kernel with mu_j replaced by mu_{-j}.
    InteractionKernel mirrored() const;

    bool operator==(const InteractionKernel&) const = default;

private:
    std::size_t index_of(int displacement) const;

    int range_;
    std::vector<double> rates_;
    double total_ = 0.0;
};

struct SpaceTimeWindow {
    std::int32_t x_min = 0;
    std::int32_t x_max = 0;
    double t_max = 0.0;

    void validate() const;
    std::size_t site_count() const noexcept { return static_cast<std::size_t>(x_max - x_min) + 1; }
    bool contains_site(std::int64_t x) const noexcept { return x >= x_min && x <= x_max; }

    static SpaceTimeWindow centered(std::int32_t half_width, double t_max) { return {-half_width, half_width, t_max}; }

    bool operator==(const SpaceTimeWindow&) const = default;
};

enum class EventKind : std::uint8_t { death = 0, birth = 1 };

/// A death mark at `source`, or a birth arrow source -> source + offset.
struct Event {
    double time = 0.0;
    std::int32_t source = 0;
    std::int16_t offset = 0;
    EventKind kind = EventKind::death;

    static Event death(std::int32_t site, double time) { return {time, site, 0, EventKind::death}; }
    static Event arrow(std::int32_t source, std::int32_t target, double time) {
        return {time, source, static_cast<std::int16_t>(target - source), EventKind::birth};
    }

    bool is_death() const noexcept { return kind == EventKind::death; }
    std::int32_t site() const noexcept { return source; }
    std::int32_t target() const noexcept { return source + offset; }

    bool operator==(const Event&) const = default;
};

/// Total order on events: time, then deaths before arrows, then site, then displacement.
bool event_before(const Event& a, const Event& b) noexcept;

/// How a log came to be. Frozen-boundary arrow streams are derived from the
/// seed and are only meaningful for logs that keep the generator's time axis.
enum class LogProvenance : std::uint8_t { generated = 0, edited = 1, reversed = 2, manual = 3 };

/// One realization of the graphical representation on a finite window.
/// Immutable once built.
class EventLog {
public:
    /// Hand-built log. Events are validated and put into canonical order.
    static EventLog from_events(InteractionKernel kernel, SpaceTimeWindow window, std::uint64_t seed,
                                std::vector<Event> events, LogProvenance provenance = LogProvenance::manual);

    const InteractionKernel& kernel() const noexcept { return kernel_; }
    const SpaceTimeWindow& window() const noexcept { return window_; }
    std::uint64_t seed() const noexcept { return seed_; }
    LogProvenance provenance() const noexcept { return provenance_; }
    std::span<const Event> events() const noexcept { return events_; }
    std::size_t size() const noexcept { return events_.size(); }

    /// Content hash of (kernel, window, seed, provenance, events).
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

    bool has_boundary_streams() const noexcept { return provenance_ != LogProvenance::reversed; }

    std::size_t death_count() const noexcept;

    bool operator==(const EventLog& other) const;

private:
    EventLog(InteractionKernel kernel, SpaceTimeWindow window, std::uint64_t seed, std::vector<Event> events,
             LogProvenance provenance);

    InteractionKernel kernel_;
    SpaceTimeWindow window_;
    std::uint64_t seed_;
    LogProvenance provenance_;
    std::vector<Event> events_;
    std::uint64_t fingerprint_ = 0;

    friend EventLog generate_log(const InteractionKernel&, const SpaceTimeWindow&, std::uint64_t);
};

/// Box V x [t_lo, t_hi] in space-time with V = [site_lo, site_hi].
struct SpaceTimeBox {
    std::int32_t site_lo = 0;
    std::int32_t site_hi = 0;
    double t_lo = 0.0;
    double t_hi = 0.0;

    std::size_t site_count() const noexcept { return static_cast<std::size_t>(site_hi - site_lo) + 1; }
    bool contains(std::int32_t site, double time) const noexcept {
        return site >= site_lo && site <= site_hi && time >= t_lo && time <= t_hi;
    }
};

/// Poisson death marks (rate 1 per site) and birth arrows (rate mu_j per
/// (site, j) whose target lies in the window). Each (site, stream) pair draws
/// from its own seed split, so enlarging the window or horizon only adds events.
EventLog generate_log(const InteractionKernel& kernel, const SpaceTimeWindow& window, std::uint64_t seed);

/// Death-mark times of `site` on [0, t_max], from the same stream generate_log uses.
std::vector<double> death_times(std::uint64_t seed, std::int32_t site, double t_max);

/// Arrows from the M virtual sites beyond each window edge into the window,
/// up to time t_end, in canonical order. These are the arrows a log on a
/// wider window would contain for those sources.
std::vector<Event> boundary_arrows(const EventLog& log, double t_end);

/// Removes exactly the death marks inside `box`.
EventLog clear_deaths_in_box(const EventLog& log, const SpaceTimeBox& box);

/// Time reversal of the segment (t_lo, t_hi]: an event at s moves to
/// t_hi - s and arrows swap source and target.
EventLog reverse_segment(const EventLog& log, double t_lo, double t_hi);

/// Little-endian binary dump; see docs/log_format.md.
void write_log(std::ostream& out, const EventLog& log);
EventLog read_log(std::istream& in);

}  // namespace conecouple
