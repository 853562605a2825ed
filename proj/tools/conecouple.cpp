#include "conecouple/run.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int run_subcommand(const std::string& experiment, const std::string& config_path, std::optional<std::uint64_t> seed_flag,
                   unsigned workers, const std::string& out_dir, const std::vector<std::string>& overrides) {
    std::string text;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot read config " << config_path << '\n';
            return 1;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    // The subcommand names the experiment; a config that names another one is an error.
    std::vector<std::string> all_overrides = overrides;
    const auto parsed_probe = conecouple::parse_config(text);
    if (parsed_probe.config && parsed_probe.config->experiment() != experiment) {
        std::cerr << "error: config names experiment '" << parsed_probe.config->experiment() << "' but the subcommand is '"
                  << experiment << "'\n";
        return 1;
    }
    all_overrides.insert(all_overrides.begin(), "experiment = " + experiment);
    const auto parsed = conecouple::parse_config(text, all_overrides);
    if (!parsed.ok()) {
        for (const auto& e : parsed.errors) {
            std::cerr << "config error";
            if (e.line > 0) std::cerr << " (line " << e.line << ")";
            std::cerr << ": " << e.message << '\n';
        }
        return 1;
    }
    conecouple::RunOptions options;
    options.out_dir = out_dir;
    options.workers = workers;
    try {
        options.seed = conecouple::resolve_seed(seed_flag, *parsed.config, std::getenv("CONECOUPLE_SEED"));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    const int code = conecouple::run(*parsed.config, options, std::cerr);
    if (code != 1) {
        std::ifstream summary(std::filesystem::path(out_dir) / "summary.txt");
        std::cout << summary.rdbuf();
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conecouple: contact-process coupling experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned workers = 0;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    std::string chosen;

    for (const auto& name : conecouple::experiment_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->add_option("--seed", seed, "master seed (fallback: config, then CONECOUPLE_SEED)");
        sub->add_option("--workers", workers, "worker threads (0 = all cores)");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--override", overrides, "key=value applied after the config (repeatable)");
        sub->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return run_subcommand(chosen, config_path, seed, workers, out_dir, overrides);
}
