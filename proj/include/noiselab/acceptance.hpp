#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "noiselab/config.hpp"

namespace noiselab {

struct CriterionResult {
    std::string id;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;   // kept out of the table and report so reruns compare equal
    double budget = 0.0;    // seconds, 0 = none
};

struct AcceptanceReport {
    std::vector<CriterionResult> criteria;
    bool quick = false;
    bool all_pass() const;
    std::string table() const;
    Json json() const;
};

// The calibrated bench setting used by the bench criteria and configs/bench_standard.toml.
BenchParams standard_bench();
std::vector<BenchVariant> standard_variants();

struct AcceptanceOptions {
    bool quick = false;
    std::optional<std::filesystem::path> out_dir;   // artifacts and report.json
    bool determinism_rerun = true;                  // A11 reruns the suite into a scratch dir
    std::vector<std::string> only;                  // criterion ids to run; empty runs all
};

AcceptanceReport run_acceptance(const AcceptanceOptions& opt);

} // namespace noiselab
