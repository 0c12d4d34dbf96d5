#pragma once

// Run configurations and the deterministic command-line driver. A run is
// one JSON config naming a subcommand plus its parameters; the config is
// validated against a per-command schema (missing fields and unknown keys
// both rejected) before any computation starts. Results land in the
// configured output directory as CSV/JSON artifacts next to a manifest
// that echoes the config and records versions, seed, and wall time.
// Identical config + seed reproduce the numeric artifacts byte for byte;
// only the manifest (which carries the wall time) may differ.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace fractorus {

// configuration rejected before computation (binary exit code 2)
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// computation ran but failed or missed its target; whatever rows were
// produced are on disk, flagged, with a manifest recording the failure
// (binary exit code 3)
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed; // overrides the config's seed
    bool dry_run = false;              // validate + print the plan only
    int threads = 1;                   // worker-pool cap, recorded in the manifest
};

// Load and validate the config, run its subcommand, and write artifacts
// plus manifest.json into output_dir. Subcommands: kernel-check, seminorm,
// extension-check, monotonicity, perimeter, nmc, layer1d, solve-ac,
// morse-index, sweepout, scaling, eps-limit, bv-density-probe. Throws
// ConfigError for anything wrong with the config and NumericalError when
// the computation itself fails.
void run_cli(const CliOptions& opts);

} // namespace fractorus
