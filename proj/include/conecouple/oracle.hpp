#pragma once

#include "conecouple/engine.hpp"

#include <cstdint>
#include <vector>

namespace conecouple {

/// Largest window the exact chain accepts (2^12 states).
inline constexpr int oracle_max_sites = 12;

/// Sparse generator of the contact process on n sites. State index bit i is
/// site i of the window (site i <-> bit i).
class GeneratorMatrix {
public:
    struct Transition {
        std::uint32_t target;
        double rate;
    };

    int n_sites() const noexcept { return n_sites_; }
    std::size_t state_count() const noexcept { return exit_.size(); }
    BoundaryPolicy boundary() const noexcept { return boundary_; }
    const InteractionKernel& kernel() const noexcept { return kernel_; }

    /// Off-diagonal entries of row `state`.
    std::span<const Transition> row(std::uint32_t state) const noexcept {
        return {transitions_.data() + offsets_[state], transitions_.data() + offsets_[state + 1]};
    }
    /// Total exit rate, i.e. -Q(state, state).
    double exit_rate(std::uint32_t state) const noexcept { return exit_[state]; }
    double max_exit_rate() const noexcept;

    /// Q(from, to), diagonal included.
    double entry(std::uint32_t from, std::uint32_t to) const noexcept;

private:
    friend GeneratorMatrix build_generator(const InteractionKernel&, int, BoundaryPolicy);
    GeneratorMatrix(const InteractionKernel& kernel, int n, BoundaryPolicy boundary)
        : kernel_(kernel), n_sites_(n), boundary_(boundary) {}

    InteractionKernel kernel_;
    int n_sites_;
    BoundaryPolicy boundary_;
    std::vector<std::size_t> offsets_;
    std::vector<Transition> transitions_;
    std::vector<double> exit_;
};

/// Throws CapacityError for n_sites > oracle_max_sites, ParameterError for n_sites < 1.
GeneratorMatrix build_generator(const InteractionKernel& kernel, int n_sites, BoundaryPolicy boundary);

/// Window [0, n-1] on which oracle states and simulator configurations correspond.
SpaceTimeWindow oracle_window(int n_sites, double t_max);
std::uint32_t state_index(const Configuration& config);
Configuration state_configuration(std::uint32_t state, int n_sites);

/// Truncation error bound of transient_distribution in total mass.
inline constexpr double uniformization_tolerance = 1e-10;

/// Law of xi_t by uniformization at rate max exit rate. `initial` must live on oracle_window(n).
std::vector<double> transient_distribution(const GeneratorMatrix& q, const Configuration& initial, double t);
std::vector<double> transient_distribution(const GeneratorMatrix& q, std::vector<double> initial, double t);

/// Mass of the all-vacant state at time t.
double extinction_probability_exact(const GeneratorMatrix& q, const Configuration& initial, double t);

}  // namespace conecouple
