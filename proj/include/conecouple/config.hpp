#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace conecouple {

/// Experiments selectable by `experiment = ...` or a CLI subcommand.
const std::vector<std::string>& experiment_names();

using ConfigValue = std::variant<std::int64_t, double, std::string, std::vector<std::int64_t>, std::vector<double>,
                                 std::vector<std::string>>;

struct ConfigError {
    int line = 0;  ///< 0 when the error is not tied to a line (e.g. a missing key)
    std::string message;
};

/// Validated `key = value` configuration. Values are typed by a fixed
/// schema; keys a given experiment does not use are rejected.
class RunConfig {
public:
    const std::string& experiment() const noexcept { return experiment_; }

    bool has(const std::string& key) const;
    std::int64_t integer(const std::string& key) const;
    double real(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    std::vector<std::int64_t> integers(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;
    std::vector<std::string> texts(const std::string& key) const;
    std::optional<std::uint64_t> seed() const;

    /// Every key the experiment uses, defaults filled in.
    const std::map<std::string, ConfigValue>& effective() const noexcept { return values_; }
    /// Re-parseable text of the effective configuration.
    std::string to_text() const;
    nlohmann::json to_json() const;

private:
    friend struct ConfigParser;
    std::string experiment_;
    std::map<std::string, ConfigValue> values_;
};

struct ParseResult {
    std::optional<RunConfig> config;
    std::vector<ConfigError> errors;

    bool ok() const noexcept { return config.has_value(); }
};

/// Parses one `key = value` per line with `#` comments. `overrides` are
/// `key=value` strings applied after the text; they replace earlier values.
/// All errors are collected, each with its line number.
ParseResult parse_config(const std::string& text, const std::vector<std::string>& overrides = {});

}  // namespace conecouple
