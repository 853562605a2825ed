#pragma once

#include "conecouple/graphical.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace conecouple {

/// Occupied-site set over a window, stored densely: xi(x) = 1(x in xi).
class Configuration {
public:
    explicit Configuration(const SpaceTimeWindow& window);

    static Configuration empty(const SpaceTimeWindow& window) { return Configuration(window); }
    static Configuration full(const SpaceTimeWindow& window);
    static Configuration from_sites(const SpaceTimeWindow& window, std::span<const std::int32_t> sites);
    static Configuration from_sites(const SpaceTimeWindow& window, std::initializer_list<std::int32_t> sites) {
        return from_sites(window, std::span<const std::int32_t>(sites.begin(), sites.size()));
    }

    std::int32_t x_min() const noexcept { return x_min_; }
    std::int32_t x_max() const noexcept { return x_max_; }
    std::size_t site_count() const noexcept { return occ_.size(); }

    /// False for sites outside the window.
    bool occupied(std::int64_t x) const noexcept {
        return x >= x_min_ && x <= x_max_ && occ_[static_cast<std::size_t>(x - x_min_)] != 0;
    }
    void set(std::int32_t x, bool value);

    std::size_t count() const noexcept { return count_; }
    bool is_empty() const noexcept { return count_ == 0; }
    bool is_full() const noexcept { return count_ == occ_.size(); }
    std::vector<std::int32_t> sites() const;
    std::optional<std::int32_t> leftmost() const;
    std::optional<std::int32_t> rightmost() const;

    bool same_sites_as(const Configuration& other) const noexcept {
        return x_min_ == other.x_min_ && x_max_ == other.x_max_;
    }
    bool subset_of(const Configuration& other) const;
    Configuration united(const Configuration& other) const;
    bool intersects(const Configuration& other) const;

    std::span<const std::uint8_t> raw() const noexcept { return occ_; }
    /// Takes ownership of one byte per site (nonzero = occupied).
    static Configuration from_cells(std::int32_t x_min, std::vector<std::uint8_t> cells);

    bool operator==(const Configuration& other) const noexcept {
        return same_sites_as(other) && occ_ == other.occ_;
    }

private:
    std::int32_t x_min_;
    std::int32_t x_max_;
    std::vector<std::uint8_t> occ_;
    std::size_t count_ = 0;
};

/// How sites beyond the window behave during replay.
enum class BoundaryPolicy : std::uint8_t {
    vacant_outside,          ///< permanently vacant
    frozen_occupied_outside  ///< the M sites past each edge are permanently occupied
};

const char* to_string(BoundaryPolicy policy) noexcept;

/// One site changing value at one time.
struct Delta {
    double time;
    std::int32_t site;
    std::uint8_t value;
};

/// Edge processes after a change: l_t, r_t and their running extrema L_t, R_t.
/// A sample with alive == false marks the configuration becoming empty;
/// l and r are then meaningless.
struct EdgeSample {
    double time;
    std::int32_t left;
    std::int32_t right;
    std::int32_t min_left;
    std::int32_t max_right;
    bool alive = true;
};

/// A replay of a log from one initial configuration. Stores the initial
/// state and per-event deltas; any intermediate state can be rebuilt.
class Trajectory {
public:
    const Configuration& initial() const noexcept { return initial_; }
    BoundaryPolicy boundary() const noexcept { return boundary_; }
    std::uint64_t log_fingerprint() const noexcept { return log_fingerprint_; }
    double t_start() const noexcept { return t_start_; }
    double t_end() const noexcept { return t_end_; }

    std::span<const Delta> deltas() const noexcept { return deltas_; }

    /// Edge samples, one per change of (l, r, L, R). Empty when the start is
    /// the full window, where edges are not tracked.
    std::span<const EdgeSample> edges() const noexcept { return edges_; }
    bool tracks_edges() const noexcept { return tracks_edges_; }

    /// Edges in force at time t; none while the configuration is empty.
    std::optional<EdgeSample> edges_at(double t) const;

    /// Time the configuration last became empty, if it is empty at t_end.
    std::optional<double> extinction_time() const noexcept { return extinction_time_; }

    /// First time an occupied site sat within M of a window edge. While this
    /// is absent, a vacant-outside replay of a finite start is exact.
    std::optional<double> boundary_contact_time() const noexcept { return boundary_contact_time_; }

    /// State after all events with time <= t.
    Configuration state_at(double t) const;
    /// State after the first `delta_count` deltas.
    Configuration state_after(std::size_t delta_count) const;
    const Configuration& final_state() const noexcept { return final_; }

    bool alive_at(double t) const { return !state_at(t).is_empty(); }

private:
    friend Trajectory evolve(const EventLog&, const Configuration&, BoundaryPolicy, double, double);

    Trajectory(Configuration initial, BoundaryPolicy boundary, std::uint64_t fingerprint, double t_start, double t_end)
        : initial_(initial), final_(std::move(initial)), boundary_(boundary), log_fingerprint_(fingerprint),
          t_start_(t_start), t_end_(t_end) {}

    Configuration initial_;
    Configuration final_;
    BoundaryPolicy boundary_;
    std::uint64_t log_fingerprint_;
    double t_start_;
    double t_end_;
    std::vector<Delta> deltas_;
    std::vector<EdgeSample> edges_;
    bool tracks_edges_ = false;
    std::optional<double> extinction_time_;
    std::optional<double> boundary_contact_time_;
};

/// Replays events with time in (t_start, t_end]: a death mark vacates its
/// site; an arrow from an occupied source occupies a vacant target; all
/// other events are no-ops.
Trajectory evolve(const EventLog& log, const Configuration& initial, BoundaryPolicy boundary, double t_start,
                  double t_end);

inline Trajectory evolve(const EventLog& log, const Configuration& initial, BoundaryPolicy boundary, double t_end) {
    return evolve(log, initial, boundary, 0.0, t_end);
}

/// Several replays on one log. All initials must share the log's sites.
std::vector<Trajectory> coupled_evolve(const EventLog& log, std::span<const Configuration> initials,
                                       std::span<const BoundaryPolicy> boundaries, double t_end);

/// Estimated velocities and margin; the cone is I_t = [(beta+eps)t, (alpha-eps)t].
struct ConeSpec {
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
    double eps = 0.0;

    /// Throws ParameterError unless eps > 0 and beta+eps < alpha-eps.
    void validate() const;
    double left_speed() const noexcept { return beta_hat + eps; }
    double right_speed() const noexcept { return alpha_hat - eps; }
};

struct IntegerInterval {
    std::int64_t lo = 0;
    std::int64_t hi = -1;

    bool is_empty() const noexcept { return lo > hi; }
    std::int64_t size() const noexcept { return is_empty() ? 0 : hi - lo + 1; }
    bool contains(std::int64_t x) const noexcept { return x >= lo && x <= hi; }
    bool operator==(const IntegerInterval&) const = default;
};

/// Integers in I_t.
IntegerInterval cone_interval(const ConeSpec& spec, double t);

struct AgreementResult {
    bool holds_for_all_t = true;
    /// Supremum of the times in [t_from, t_end] where the two differ on the cone.
    std::optional<double> last_disagreement_time;
    /// Infimum of the same set.
    std::optional<double> first_disagreement_time;

    /// Agreement throughout [t_from, T].
    bool agrees_through(double T) const noexcept {
        return !first_disagreement_time || *first_disagreement_time > T;
    }
};

/// Decides xi^A_t cap I_t == xi^B_t cap I_t for every t in [t_from, t_end].
/// The predicate only changes at event times and at times a cone edge
/// crosses an integer, so it is evaluated exactly there and in between.
AgreementResult agreement_on_cone(const Trajectory& a, const Trajectory& b, const ConeSpec& spec, double t_end,
                                  double t_from = 0.0);

/// Full-window start replayed under both boundary policies. On Z-start the
/// vacant replay is below and the frozen replay above xi^Z.
struct Sandwich {
    Trajectory lower;
    Trajectory upper;
    AgreementResult agreement;

    /// Certified on [0, T]: lower and upper agree on the cone there.
    bool certified_through(double T) const noexcept { return agreement.agrees_through(T); }
};

Sandwich full_start_sandwich(const EventLog& log, const ConeSpec& spec, double t_end);

/// True iff the sandwich agrees on I_t for all t <= t_end.
bool truncation_certificate(const EventLog& log, const ConeSpec& spec, double t_end);

/// Sites kept beyond the fastest edge when sizing a window.
inline constexpr std::int32_t default_window_margin = 50;

/// Half-width for full-start experiments:
/// ceil(max(|alpha|, |beta|) * t_end) + margin + M. Exactness on the cone is
/// checked per realization by the sandwich, not assumed from the margin.
std::int32_t default_half_width(const InteractionKernel& kernel, const ConeSpec& spec, double t_end,
                                std::int32_t margin = default_window_margin);

/// Light-cone half-width ceil((max(|alpha|, |beta|) + sum mu) * t_end) + M,
/// beyond which no influence can travel with overwhelming probability.
std::int32_t lightcone_half_width(const InteractionKernel& kernel, const ConeSpec& spec, double t_end);

}  // namespace conecouple
