#pragma once

#include "conecouple/config.hpp"
#include "conecouple/experiments.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace conecouple {

inline constexpr int schema_version = 1;
inline constexpr std::uint64_t default_master_seed = 1;

/// Flag, then config, then the CONECOUPLE_SEED value, then the default.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const RunConfig& config, const char* env_value);

/// Runs the configured experiment without touching the file system.
ExperimentReport execute(const RunConfig& config, std::uint64_t seed, unsigned workers);

/// report.json body: schema version, effective config (with the seed) and the report.
nlohmann::json report_document(const RunConfig& config, std::uint64_t seed, const ExperimentReport& report);

struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = default_master_seed;
    unsigned workers = 0;
};

/// Files a run writes into the output directory.
const std::vector<std::string>& output_files();

/// Executes and writes report.json, grid.csv, summary.txt, plot.dat,
/// seeds.csv and timing.json. Returns 0 on pass, 2 on a failed verdict and 1
/// on any error, in which case the output files are removed.
int run(const RunConfig& config, const RunOptions& options, std::ostream& err);

}  // namespace conecouple
