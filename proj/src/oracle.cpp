#include "conecouple/oracle.hpp"

#include "conecouple/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace conecouple {

double GeneratorMatrix::max_exit_rate() const noexcept {
    return exit_.empty() ? 0.0 : *std::max_element(exit_.begin(), exit_.end());
}

double GeneratorMatrix::entry(std::uint32_t from, std::uint32_t to) const noexcept {
    if (from == to) return -exit_[from];
    for (const auto& tr : row(from)) {
        if (tr.target == to) return tr.rate;
    }
    return 0.0;
}

GeneratorMatrix build_generator(const InteractionKernel& kernel, int n_sites, BoundaryPolicy boundary) {
    if (n_sites < 1) throw ParameterError("oracle needs at least one site");
    if (n_sites > oracle_max_sites) {
        throw CapacityError("oracle supports at most " + std::to_string(oracle_max_sites) + " sites, got " +
                            std::to_string(n_sites));
    }
    GeneratorMatrix q(kernel, n_sites, boundary);
    const std::uint32_t states = 1u << n_sites;
    const int m = kernel.range();

    // Birth rate into site y from the frozen virtual sites beyond each edge.
    std::vector<double> boundary_in(static_cast<std::size_t>(n_sites), 0.0);
    if (boundary == BoundaryPolicy::frozen_occupied_outside) {
        for (int y = 0; y < n_sites; ++y) {
            for (int x = -m; x < 0; ++x) {
                if (y - x <= m) boundary_in[static_cast<std::size_t>(y)] += kernel.rate(y - x);
            }
            for (int x = n_sites; x < n_sites + m; ++x) {
                if (x - y <= m) boundary_in[static_cast<std::size_t>(y)] += kernel.rate(y - x);
            }
        }
    }

    q.offsets_.reserve(states + 1);
    q.exit_.resize(states);
    q.offsets_.push_back(0);
    for (std::uint32_t s = 0; s < states; ++s) {
        double exit = 0.0;
        for (int y = 0; y < n_sites; ++y) {
            const std::uint32_t bit = 1u << y;
            if (s & bit) {
                q.transitions_.push_back({s & ~bit, 1.0});
                exit += 1.0;
                continue;
            }
            double rate = boundary_in[static_cast<std::size_t>(y)];
            for (int x = std::max(0, y - m); x <= std::min(n_sites - 1, y + m); ++x) {
                if (x != y && (s & (1u << x))) rate += kernel.rate(y - x);
            }
            if (rate > 0.0) {
                q.transitions_.push_back({s | bit, rate});
                exit += rate;
            }
        }
        q.exit_[s] = exit;
        q.offsets_.push_back(q.transitions_.size());
    }
    return q;
}

SpaceTimeWindow oracle_window(int n_sites, double t_max) { return {0, n_sites - 1, t_max}; }

std::uint32_t state_index(const Configuration& config) {
    if (config.x_min() != 0 || config.site_count() > static_cast<std::size_t>(oracle_max_sites)) {
        throw ParameterError("configuration does not live on an oracle window");
    }
    std::uint32_t s = 0;
    const auto cells = config.raw();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i]) s |= 1u << i;
    }
    return s;
}

Configuration state_configuration(std::uint32_t state, int n_sites) {
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(n_sites));
    for (int i = 0; i < n_sites; ++i) cells[static_cast<std::size_t>(i)] = (state >> i) & 1u;
    return Configuration::from_cells(0, std::move(cells));
}

namespace {

// One uniformization block of length t with Lambda*t moderate.
std::vector<double> propagate_block(const GeneratorMatrix& q, const std::vector<double>& start, double rate, double t,
                                    double tolerance) {
    const double mean = rate * t;
    std::vector<double> term = start;
    std::vector<double> next(start.size());
    std::vector<double> out(start.size(), 0.0);
    double covered = 0.0;
    for (std::size_t k = 0;; ++k) {
        const double weight =
            std::exp(-mean + static_cast<double>(k) * std::log(mean) - std::lgamma(static_cast<double>(k) + 1.0));
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += weight * term[i];
        covered += weight;
        if (1.0 - covered <= tolerance && static_cast<double>(k) >= mean) break;
        std::fill(next.begin(), next.end(), 0.0);
        for (std::uint32_t s = 0; s < term.size(); ++s) {
            const double mass = term[s];
            if (mass == 0.0) continue;
            next[s] += mass * (1.0 - q.exit_rate(s) / rate);
            for (const auto& tr : q.row(s)) next[tr.target] += mass * tr.rate / rate;
        }
        term.swap(next);
    }
    return out;
}

}  // namespace

std::vector<double> transient_distribution(const GeneratorMatrix& q, std::vector<double> initial, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ParameterError("transient_distribution needs finite t >= 0");
    if (initial.size() != q.state_count()) throw ParameterError("initial distribution has the wrong size");
    const double rate = q.max_exit_rate();
    if (t == 0.0 || rate == 0.0) return initial;
    // Blocks keep exp(-Lambda*dt) far from underflow; the error budget is split evenly.
    constexpr double max_block_mean = 40.0;
    const auto blocks = static_cast<std::size_t>(std::ceil(rate * t / max_block_mean));
    const double dt = t / static_cast<double>(blocks);
    const double tolerance = uniformization_tolerance / static_cast<double>(blocks);
    for (std::size_t b = 0; b < blocks; ++b) initial = propagate_block(q, initial, rate, dt, tolerance);
    return initial;
}

std::vector<double> transient_distribution(const GeneratorMatrix& q, const Configuration& initial, double t) {
    if (initial.site_count() != static_cast<std::size_t>(q.n_sites())) {
        throw ParameterError("initial configuration does not match the generator's site count");
    }
    std::vector<double> start(q.state_count(), 0.0);
    start[state_index(initial)] = 1.0;
    return transient_distribution(q, std::move(start), t);
}

double extinction_probability_exact(const GeneratorMatrix& q, const Configuration& initial, double t) {
    return transient_distribution(q, initial, t)[0];
}

}  // namespace conecouple
