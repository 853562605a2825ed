#include "conecouple/error.hpp"
#include "conecouple/experiments.hpp"
#include "conecouple/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace conecouple {

namespace {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out += ',';
        out += columns[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

std::string Table::to_plot_text() const {
    std::string out = "#";
    for (const auto& c : columns) out += ' ' + c;
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ' ';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

bool ExperimentReport::passed() const noexcept {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.second; });
}

nlohmann::json ExperimentReport::to_json() const {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["parameters"] = parameters;
    j["estimates"] = estimates;
    j["certificates"] = certificates;
    nlohmann::json v = nlohmann::json::object();
    for (const auto& [name, ok] : verdicts) v[name] = ok;
    j["verdicts"] = v;
    j["passed"] = passed();
    j["notes"] = notes;
    j["replicate_seeds"] = {{"count", seeds.size()}, {"file", "seeds.csv"}};
    return j;
}

std::string ExperimentReport::summary_text() const {
    std::ostringstream out;
    out << "experiment: " << experiment << '\n';
    out << "result: " << (passed() ? "PASS" : "FAIL") << '\n';
    for (const auto& [name, ok] : verdicts) out << "  " << (ok ? "pass " : "FAIL ") << name << '\n';
    out << "estimates:\n" << estimates.dump(2) << '\n';
    if (!certificates.empty()) out << "certificates:\n" << certificates.dump(2) << '\n';
    for (const auto& note : notes) out << "note: " << note << '\n';
    return out.str();
}

std::uint64_t replicate_seed(std::uint64_t master, std::string_view stream, std::uint64_t grid_index,
                             std::uint64_t replicate) {
    return derive_seed(master, {fnv1a(stream), grid_index, replicate});
}

nlohmann::json to_json(const Proportion& p) {
    return {{"successes", p.successes}, {"trials", p.trials},   {"estimate", p.estimate},
            {"ci_lo", p.ci.lo},         {"ci_hi", p.ci.hi},     {"confidence", p.confidence}};
}

nlohmann::json to_json(const DecayFit& fit) {
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& pt : fit.grid) {
        grid.push_back({{"t", pt.t},
                        {"count", pt.count},
                        {"trials", pt.trials},
                        {"estimate", pt.estimate},
                        {"stderr", pt.stderr_},
                        {"used", pt.used}});
    }
    nlohmann::json j{{"grid", grid}, {"fitted", fit.fitted}, {"dropped", fit.dropped}, {"confidence", fit.confidence}};
    if (fit.fitted) {
        j["log_slope"] = fit.slope;
        j["log_slope_ci"] = {fit.slope_ci.lo, fit.slope_ci.hi};
        j["log_intercept"] = fit.intercept;
        j["log_intercept_ci"] = {fit.intercept_ci.lo, fit.intercept_ci.hi};
        j["gamma"] = fit.gamma();
        j["C"] = std::exp(fit.intercept);
    }
    return j;
}

Table trajectory_table(const Trajectory& traj) {
    Table t;
    t.columns = {"time", "site", "new_value"};
    t.rows.reserve(traj.deltas().size());
    for (const auto& d : traj.deltas()) {
        t.rows.push_back({d.time, static_cast<double>(d.site), static_cast<double>(d.value)});
    }
    return t;
}

nlohmann::json trajectory_summary(const Trajectory& traj) {
    const auto& final_state = traj.final_state();
    nlohmann::json j{{"t_start", traj.t_start()},
                     {"t_end", traj.t_end()},
                     {"boundary", to_string(traj.boundary())},
                     {"initial_count", traj.initial().count()},
                     {"final_count", final_state.count()},
                     {"changes", traj.deltas().size()},
                     {"extinction_time", nullptr},
                     {"boundary_contact_time", nullptr}};
    if (traj.extinction_time()) j["extinction_time"] = *traj.extinction_time();
    if (traj.boundary_contact_time()) j["boundary_contact_time"] = *traj.boundary_contact_time();
    if (!final_state.is_empty()) {
        j["final_left"] = *final_state.leftmost();
        j["final_right"] = *final_state.rightmost();
    }
    if (traj.tracks_edges() && !traj.edges().empty()) {
        const auto& last = traj.edges().back();
        j["min_left"] = last.min_left;
        j["max_right"] = last.max_right;
    }
    return j;
}

const char* to_string(WindowRule rule) noexcept { return rule == WindowRule::margin ? "margin" : "lightcone"; }

std::int32_t WindowOptions::half_width(const InteractionKernel& kernel, const ConeSpec& cone, double t_end) const {
    return rule == WindowRule::margin ? default_half_width(kernel, cone, t_end, margin)
                                      : lightcone_half_width(kernel, cone, t_end);
}

}  // namespace conecouple
