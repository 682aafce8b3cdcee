// Command-line runner: one experiment per invocation, driven by a config file.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "khess/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"k-Hessian boundary blow-up experiments"};
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    app.add_option("--config", config_path, "Experiment config (key = value per line)")->required();
    app.add_option("--out", out_dir, "Directory for report files");
    app.add_option("--seed", seed, "Override the sampling seed");
    app.add_flag("--quiet", quiet, "Suppress the summary line");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    khess::ExperimentConfig cfg;
    try {
        cfg = khess::ExperimentConfig::load(config_path);
    } catch (const khess::Error& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return 2;
    }
    const auto result = khess::run(cfg, {out_dir, seed});
    if (result.error)
        std::cerr << result.summary << '\n';
    else if (!quiet)
        std::cout << result.summary << '\n';
    return static_cast<int>(result.status);
}
