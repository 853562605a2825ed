#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace conecouple {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const noexcept { return v >= lo && v <= hi; }
    bool overlaps(const Interval& o) const noexcept { return lo <= o.hi && o.lo <= hi; }
    double width() const noexcept { return hi - lo; }
};

/// Standard normal quantile.
double normal_quantile(double p);

/// Binomial proportion with its Wilson score interval.
struct Proportion {
    std::uint64_t successes = 0;
    std::uint64_t trials = 0;
    double estimate = 0.0;
    Interval ci;
    double confidence = 0.0;
};

/// Two-sided Wilson interval at the given confidence; trials must be > 0.
Proportion wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence);

/// One grid point of an exponential-decay estimate.
struct DecayPoint {
    double t = 0.0;
    std::uint64_t count = 0;
    std::uint64_t trials = 0;
    double estimate = 0.0;
    double stderr_ = 0.0;
    bool used = false;  ///< entered the fit (nonzero count)
};

DecayPoint decay_point(double t, std::uint64_t count, std::uint64_t trials);

/// log p(t) ~ intercept + slope * t, i.e. p <= C e^{-gamma t} with
/// C = exp(intercept) and gamma = -slope.
struct DecayFit {
    std::vector<DecayPoint> grid;
    bool fitted = false;  ///< at least two usable points
    double slope = 0.0;
    double intercept = 0.0;
    Interval slope_ci;
    Interval intercept_ci;
    double confidence = 0.0;
    std::vector<double> dropped;  ///< grid times with zero count

    double gamma() const noexcept { return -slope; }
    /// Fitted and the slope interval lies strictly below zero.
    bool decays() const noexcept { return fitted && slope_ci.hi < 0.0; }
};

/// Weighted least squares of log estimates with delta-method variances
/// (1 - p + 1/n) / count; zero-count points are dropped and listed.
DecayFit fit_log_linear(std::vector<DecayPoint> grid, double confidence = 0.95);

double mean_of(std::span<const double> values);

/// Percentile bootstrap interval for the mean.
Interval bootstrap_mean_ci(std::span<const double> values, double confidence, std::size_t resamples,
                           std::uint64_t seed);

/// Chi-square test of homogeneity for two histograms over the same bins.
/// Bins are merged left to right until each merged bin has expected count >= 5
/// in both samples. Returns the p-value (1 when fewer than two bins remain).
double chi_square_homogeneity(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

}  // namespace conecouple
