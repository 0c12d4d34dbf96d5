#include "fractorus/io.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

// Thin front end: flags select the config and a few run-wide knobs, the
// config does everything else. Exit codes: 0 success, 2 invalid config
// or flags, 3 numerical failure (flagged artifacts are on disk).

int main(int argc, char** argv) {
    CLI::App app{"fractorus: fractional-geometry experiments on flat tori"};
    std::string config_path;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    std::uint64_t seed = 0;
    CLI::Option* seed_opt =
        app.add_option("--seed", seed, "override the seed in the config");
    bool dry_run = false;
    app.add_flag("--dry-run", dry_run,
                 "validate the config and print the resolved plan, then stop");
    int threads = 1;
    app.add_option("--threads", threads,
                   "cap on the worker pool (default 1 for reproducibility)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    fractorus::CliOptions opts;
    opts.config_path = config_path;
    if (seed_opt->count() > 0) opts.seed = seed;
    opts.dry_run = dry_run;
    opts.threads = threads;

    try {
        fractorus::run_cli(opts);
    } catch (const fractorus::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
