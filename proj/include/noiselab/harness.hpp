#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "noiselab/config.hpp"

namespace noiselab {

inline constexpr const char* kOutputRootEnv = "NOISELAB_OUTPUT_ROOT";

struct RunOptions {
    std::optional<std::filesystem::path> out_root;
    unsigned jobs = 1;
};

struct RunSummary {
    Json json;
    bool bounds_ok = true;
    std::filesystem::path output_dir;
};

// --out wins; otherwise a relative output_dir is placed under $NOISELAB_OUTPUT_ROOT when set.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opt);

RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& opt);
// Grid kinds only; points run on up to opt.jobs threads, outputs are ordered by grid index.
RunSummary run_sweep(const ExperimentConfig& cfg, const RunOptions& opt);

} // namespace noiselab
