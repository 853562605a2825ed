#include "conecouple/estimators.hpp"

#include "conecouple/error.hpp"
#include "conecouple/random.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace conecouple {

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("normal quantile needs p in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

namespace {

void check_confidence(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) throw ParameterError("confidence must lie in (0, 1)");
}

}  // namespace

Proportion wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence) {
    check_confidence(confidence);
    if (trials == 0) throw EstimationError("Wilson interval needs at least one trial");
    if (successes > trials) throw ParameterError("successes exceed trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z = normal_quantile(0.5 + confidence / 2.0);
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    Proportion out;
    out.successes = successes;
    out.trials = trials;
    out.estimate = p;
    out.ci = {std::max(0.0, centre - half), std::min(1.0, centre + half)};
    // Exact endpoints at the extremes; rounding must not pull them off 0 or 1.
    if (successes == 0) out.ci.lo = 0.0;
    if (successes == trials) out.ci.hi = 1.0;
    out.confidence = confidence;
    return out;
}

DecayPoint decay_point(double t, std::uint64_t count, std::uint64_t trials) {
    if (trials == 0) throw EstimationError("decay grid point without trials");
    DecayPoint pt;
    pt.t = t;
    pt.count = count;
    pt.trials = trials;
    pt.estimate = static_cast<double>(count) / static_cast<double>(trials);
    pt.stderr_ = std::sqrt(pt.estimate * (1.0 - pt.estimate) / static_cast<double>(trials));
    return pt;
}

DecayFit fit_log_linear(std::vector<DecayPoint> grid, double confidence) {
    check_confidence(confidence);
    DecayFit fit;
    fit.confidence = confidence;
    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (auto& pt : grid) {
        pt.used = pt.count > 0;
        if (!pt.used) {
            fit.dropped.push_back(pt.t);
            continue;
        }
        const double var = (1.0 - pt.estimate + 1.0 / static_cast<double>(pt.trials)) / static_cast<double>(pt.count);
        const double w = 1.0 / var;
        sw += w;
        swx += w * pt.t;
        swy += w * std::log(pt.estimate);
    }
    fit.grid = std::move(grid);
    const auto used = std::count_if(fit.grid.begin(), fit.grid.end(), [](const DecayPoint& p) { return p.used; });
    if (used < 2) return fit;

    const double xbar = swx / sw;
    const double ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& pt : fit.grid) {
        if (!pt.used) continue;
        const double var = (1.0 - pt.estimate + 1.0 / static_cast<double>(pt.trials)) / static_cast<double>(pt.count);
        const double w = 1.0 / var;
        sxx += w * (pt.t - xbar) * (pt.t - xbar);
        sxy += w * (pt.t - xbar) * (std::log(pt.estimate) - ybar);
    }
    if (!(sxx > 0.0)) return fit;

    fit.fitted = true;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    // Variances are treated as known, so the normal quantile applies.
    const double z = normal_quantile(0.5 + confidence / 2.0);
    const double slope_se = std::sqrt(1.0 / sxx);
    const double intercept_se = std::sqrt(1.0 / sw + xbar * xbar / sxx);
    fit.slope_ci = {fit.slope - z * slope_se, fit.slope + z * slope_se};
    fit.intercept_ci = {fit.intercept - z * intercept_se, fit.intercept + z * intercept_se};
    return fit;
}

double mean_of(std::span<const double> values) {
    if (values.empty()) throw EstimationError("mean of an empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

Interval bootstrap_mean_ci(std::span<const double> values, double confidence, std::size_t resamples,
                           std::uint64_t seed) {
    check_confidence(confidence);
    if (values.empty()) throw EstimationError("bootstrap of an empty sample");
    if (resamples == 0) throw ParameterError("bootstrap needs at least one resample");
    SplitMix64 rng(seed);
    const auto n = static_cast<double>(values.size());
    std::vector<double> means(resamples);
    for (auto& m : means) {
        double sum = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            sum += values[std::min(values.size() - 1, static_cast<std::size_t>(rng.uniform() * n))];
        }
        m = sum / static_cast<double>(values.size());
    }
    std::sort(means.begin(), means.end());
    const double tail = (1.0 - confidence) / 2.0;
    const auto last = static_cast<double>(resamples - 1);
    const auto lo = static_cast<std::size_t>(std::floor(tail * last));
    const auto hi = static_cast<std::size_t>(std::ceil((1.0 - tail) * last));
    return {means[lo], means[hi]};
}

double chi_square_homogeneity(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    if (a.size() != b.size()) throw ParameterError("histograms must share bins");
    const double na = std::accumulate(a.begin(), a.end(), 0.0);
    const double nb = std::accumulate(b.begin(), b.end(), 0.0);
    if (na == 0.0 || nb == 0.0) throw EstimationError("chi-square test with an empty sample");
    const double total = na + nb;

    std::vector<std::pair<double, double>> bins;
    double ca = 0.0, cb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ca += static_cast<double>(a[i]);
        cb += static_cast<double>(b[i]);
        const double pooled = ca + cb;
        if (pooled * na / total >= 5.0 && pooled * nb / total >= 5.0) {
            bins.emplace_back(ca, cb);
            ca = cb = 0.0;
        }
    }
    if (ca + cb > 0.0) {
        if (bins.empty()) {
            bins.emplace_back(ca, cb);
        } else {
            bins.back().first += ca;
            bins.back().second += cb;
        }
    }
    if (bins.size() < 2) return 1.0;

    double stat = 0.0;
    for (const auto& [x, y] : bins) {
        const double pooled = x + y;
        const double ea = pooled * na / total;
        const double eb = pooled * nb / total;
        stat += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    const boost::math::chi_squared_distribution<double> dist(static_cast<double>(bins.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace conecouple
