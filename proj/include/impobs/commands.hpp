#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "impobs/config.hpp"
#include "impobs/simulation.hpp"
#include "impobs/timing.hpp"

namespace impobs {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

struct CommandOptions {
    std::optional<std::size_t> seeds;
    std::optional<std::string> out_dir;
    std::optional<SigmaVariant> sigma_variant;
    bool write_files = true;
};

struct CommandResult {
    int exit_code = kExitOk;
    std::string text;
    std::vector<std::string> files;
};

// One simulated seed of a batch, keyed by its index.
struct RunSummary {
    std::size_t index = 0;
    std::uint64_t schedule_seed = 0;
    std::uint64_t noise_seed = 0;
    std::size_t jumps = 0;
    IssReport iss;
    double sigma_violation = std::numeric_limits<double>::quiet_NaN();
    double final_distance = std::numeric_limits<double>::quiet_NaN();  // |x - xhat| at the horizon
    bool passed = true;
    std::string failure;
};

struct BatchResult {
    ObserverDesign design;
    std::vector<RunSummary> runs;
    std::size_t passed = 0;
    bool ok = false;
};

// Runs `seeds` independent simulations of one config in parallel. Seeds are
// the configured schedule/noise seeds offset by the run index. Writes the
// trace files for seed 0 only when `trace_dir` is non-empty.
BatchResult run_batch(const RunConfig& cfg, std::size_t seeds, SigmaVariant variant, const std::string& trace_dir,
                      std::vector<std::string>* files = nullptr);

// Throws ConfigError for bad configs; everything else is reported in the result.
CommandResult cmd_certify(const RunConfig& cfg, const CommandOptions& opt = {});
CommandResult cmd_design(const RunConfig& cfg, const CommandOptions& opt = {});
CommandResult cmd_simulate(const RunConfig& cfg, const CommandOptions& opt = {});
// fig3 .. fig6; other ids throw ConfigError.
CommandResult cmd_reproduce(const std::string& figure, const CommandOptions& opt = {});

}  // namespace impobs
