#pragma once

#include "conecouple/dual.hpp"
#include "conecouple/engine.hpp"
#include "conecouple/estimators.hpp"
#include "conecouple/percolation.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace conecouple {

/// Numeric table written as CSV and as a whitespace-separated plot file.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::string to_csv() const;
    std::string to_plot_text() const;
};

/// Seed of one replicate; enough to replay it in isolation.
struct SeedRecord {
    std::uint64_t grid_index = 0;
    std::uint64_t replicate = 0;
    std::uint64_t seed = 0;
};

struct ExperimentReport {
    std::string experiment;
    nlohmann::json parameters = nlohmann::json::object();
    nlohmann::json estimates = nlohmann::json::object();
    nlohmann::json certificates = nlohmann::json::object();
    std::vector<std::pair<std::string, bool>> verdicts;
    std::vector<std::string> notes;
    Table grid;
    std::vector<SeedRecord> seeds;

    bool passed() const noexcept;
    /// Report body without the seed list (written separately).
    nlohmann::json to_json() const;
    std::string summary_text() const;
};

/// Seed of replicate `replicate` at grid point `grid_index` of `stream`.
std::uint64_t replicate_seed(std::uint64_t master, std::string_view stream, std::uint64_t grid_index,
                             std::uint64_t replicate);

nlohmann::json to_json(const Proportion& p);
nlohmann::json to_json(const DecayFit& fit);

/// How full-start windows are sized.
enum class WindowRule : std::uint8_t { margin, lightcone };

struct WindowOptions {
    WindowRule rule = WindowRule::margin;
    std::int32_t margin = default_window_margin;

    std::int32_t half_width(const InteractionKernel& kernel, const ConeSpec& cone, double t_end) const;
};

const char* to_string(WindowRule rule) noexcept;

/// Run settings shared by all experiments.
struct RunContext {
    std::uint64_t seed = 1;
    unsigned workers = 0;
    double confidence = 0.99;                 ///< Wilson / bootstrap level
    double max_uncertified_fraction = 0.05;   ///< above this the window is too small
    WindowOptions window;
};

/// Trajectory deltas as (time, site, new_value) rows.
Table trajectory_table(const Trajectory& traj);
/// Extinction time, final edges and boundary contact of a trajectory.
nlohmann::json trajectory_summary(const Trajectory& traj);

// ---------------------------------------------------------------- single site

/// Single-site start replayed exactly: the window doubles whenever the
/// process comes within M of an edge, and the horizon grows from a short
/// first try, so extinct runs stay cheap.
struct OriginRun {
    Trajectory trajectory;
    double horizon = 0.0;     ///< requested horizon
    bool survived = false;    ///< alive at `horizon`
    std::int32_t half_width = 0;
};

OriginRun run_from_origin(const InteractionKernel& kernel, std::uint64_t seed, double horizon,
                          std::int32_t initial_half_width = 16);

struct VelocityEstimate {
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
    Interval alpha_ci;
    Interval beta_ci;
    double horizon = 0.0;
    std::uint64_t survivors = 0;
    std::uint64_t replicates = 0;
    Proportion survival;
};

/// Means of r_T/T and l_T/T over runs alive at T, with bootstrap intervals.
/// Throws EstimationError when no run survives.
VelocityEstimate estimate_velocities(const InteractionKernel& kernel, double horizon, std::uint64_t replicates,
                                     const RunContext& ctx, std::vector<SeedRecord>* seeds = nullptr);

/// Survival and, for symmetric kernels, the alpha = -beta overlap check.
ExperimentReport velocity_report(const VelocityEstimate& est, const InteractionKernel& kernel);

// ---------------------------------------------------------------- cone runs

/// Z-start sandwich and O-start replay on one log.
struct ConeReplicate {
    std::uint64_t seed = 0;
    double horizon = 0.0;
    /// Earliest time exactness is lost: the sandwich disagrees on the cone or
    /// xi^O reaches the window edge. Infinity when neither happens.
    double uncertified_from = std::numeric_limits<double>::infinity();
    AgreementResult agreement;  ///< xi^O against the vacant-outside Z-start
    std::optional<double> o_extinction;

    bool certified_through(double t) const noexcept { return uncertified_from > t; }
    bool o_alive_at(double t) const noexcept { return !o_extinction || *o_extinction > t; }
};

ConeReplicate run_cone_replicate(const InteractionKernel& kernel, const ConeSpec& cone, double horizon,
                                 std::uint64_t seed, const WindowOptions& window);

std::vector<ConeReplicate> run_cone_replicates(const InteractionKernel& kernel, const ConeSpec& cone, double horizon,
                                               std::uint64_t replicates, const RunContext& ctx);

inline constexpr std::string_view cone_stream = "cone";

/// Positivity of P(agreement on [0, T]) on the given horizons, all computed
/// from the same replicates (denominator: certified through the largest T).
ExperimentReport theorem1_report(const std::vector<ConeReplicate>& reps, const std::vector<double>& horizons,
                                 const RunContext& ctx);

/// Tail of the last disagreement time among runs with xi^O alive at T.
ExperimentReport coupling_time_report(const std::vector<ConeReplicate>& reps, double horizon, const RunContext& ctx);

ExperimentReport theorem1_experiment(const InteractionKernel& kernel, const ConeSpec& cone,
                                     const std::vector<double>& horizons, std::uint64_t replicates,
                                     const RunContext& ctx);

ExperimentReport coupling_time_experiment(const InteractionKernel& kernel, const ConeSpec& cone, double horizon,
                                          std::uint64_t replicates, const RunContext& ctx);

// ---------------------------------------------------------------- decay

enum class SiteRule : std::uint8_t { zero, left, right };

const char* to_string(SiteRule rule) noexcept;
SiteRule site_rule_from_string(const std::string& name);

/// Site chosen by `rule` in I_{2t}; none when I_{2t} has no integers (or
/// excludes 0 for the zero rule).
std::optional<std::int32_t> choose_site(SiteRule rule, const ConeSpec& cone, double t);

/// One realization at half-time t for one site x.
struct DecayObservation {
    bool eq1_event = false;         ///< xi^O_{2t} != {} and xi^O_{2t}(x) != xi^Z_{2t}(x)
    bool eq2_event = false;         ///< xi^O_t, dual nonempty and disjoint
    bool implication_holds = true;  ///< meeting at level t forces xi^O_{2t}(x) = xi^Z_{2t}(x) = 1
    bool certified = true;
};

struct DecayRealization {
    std::vector<std::optional<DecayObservation>> per_rule;  ///< indexed like the rule list
};

DecayRealization run_decay_realization(const InteractionKernel& kernel, const ConeSpec& cone, double t,
                                       const std::vector<SiteRule>& rules, std::uint64_t seed,
                                       const WindowOptions& window);

struct DecaySeries {
    SiteRule rule;
    int equation;  ///< 1 or 2
    DecayFit fit;
};

struct DecayResult {
    std::vector<DecaySeries> series;
    std::uint64_t implication_exceptions = 0;
    std::uint64_t certified = 0;
    std::uint64_t uncertified = 0;
    ExperimentReport report;
};

DecayResult decay_experiment(const InteractionKernel& kernel, const ConeSpec& cone, const std::vector<SiteRule>& rules,
                             const std::vector<double>& t_grid, std::uint64_t replicates, const RunContext& ctx);

// ---------------------------------------------------------------- box clearing

/// V = [-v_l, v_r] for the cone at level n0.
SpaceTimeBox clearing_box(const ConeSpec& cone, int n0);

struct BoxClearObservation {
    bool qualifies = false;          ///< omega in A_{n0} on [n0, T], certified
    bool transformed_agrees = true;  ///< Z-start and V-start agree on the cone over [0, T] after clearing
    bool transformed_certified = true;
    std::size_t cleared_deaths = 0;
};

BoxClearObservation run_boxclear_realization(const InteractionKernel& kernel, const ConeSpec& cone, int n0,
                                             double horizon, std::uint64_t seed, const WindowOptions& window);

ExperimentReport boxclear_proof_check(const InteractionKernel& kernel, const ConeSpec& cone, int n0, double horizon,
                                      std::uint64_t replicates, const RunContext& ctx);

ExperimentReport box_death_free_probability(int v_site_count, double n0, std::uint64_t replicates,
                                            const RunContext& ctx);

// ---------------------------------------------------------------- extinction tail

struct ExtinctionTailResult {
    DecayFit fit;
    bool subcritical_flag = false;
    ExperimentReport report;
};

ExtinctionTailResult extinction_tail_experiment(const InteractionKernel& kernel, const std::vector<double>& t_grid,
                                                double t_max, std::uint64_t replicates, const RunContext& ctx);

// ---------------------------------------------------------------- other reports

/// Random (A, x, t) on random logs; duality must hold on every certified case.
ExperimentReport duality_experiment(const InteractionKernel& kernel, std::int32_t half_width, double max_half_time,
                                    std::uint64_t cases, const RunContext& ctx);

/// Simulated law of xi_t from the middle site against the exact chain.
ExperimentReport oracle_validation(const InteractionKernel& kernel, const std::vector<int>& site_counts,
                                   const std::vector<double>& times, std::uint64_t replicates, const RunContext& ctx);

/// Eq3 fit plus the exact p_S-monotonicity and full-cone checks.
ExperimentReport percolation_report(const Eq3Params& params, std::uint64_t check_trials, const RunContext& ctx);

}  // namespace conecouple
