#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "noiselab/bench.hpp"
#include "noiselab/etp.hpp"
#include "noiselab/losses.hpp"

namespace noiselab {

using Json = nlohmann::json;

struct RateSweepParams {
    std::size_t dim = 2;
    double sigma = 1.0;
    std::vector<double> mu1;            // empty: origin
    std::vector<double> mu2;            // empty: mu1 + sigma * 1
    std::vector<double> orthogonal;     // shift component added on top of alpha (mu2 - mu1); must be orthogonal
    double alpha_min = -1.0;
    double alpha_max = 1.0;
    double alpha_step = 0.05;
    std::size_t monte_carlo_samples = 0;
};

struct RegionCheckParams {
    std::size_t dim = 100;
    double sigma = 1.0;
    double alpha = 0.2;
    double delta_conf = 0.01;
    std::size_t samples = 100000;
    std::size_t chain_samples = 20000;
};

struct EtpRunParams {
    std::size_t n = 10000;
    std::size_t dim = 100;
    double sigma = 0.05;
    double r = 0.5;
    double eta = 0.1;
    std::size_t max_steps = 500;
    bool half_argument = false;
    std::vector<double> mu;
};

struct EtpGridParams {
    EtpRunParams base;
    std::vector<double> sigmas;
    std::vector<double> rs;
};

struct BenchVariant {
    std::string label;
    TrainConfig train;
};

struct BenchParams {
    GeometryConfig geometry;
    SourceConfig source;
    TrainConfig train;
    std::vector<BenchVariant> variants;   // bench_compare only
};

enum class ExperimentKind { RateSweep, RegionCheck, EtpRun, EtpGrid, BenchRun, BenchCompare, Memorization };

std::string kind_name(ExperimentKind k);
bool is_grid_kind(ExperimentKind k);

struct ExperimentConfig {
    std::string name;
    ExperimentKind kind;
    std::vector<std::uint64_t> seeds;
    std::string output_dir;
    std::variant<RateSweepParams, RegionCheckParams, EtpRunParams, EtpGridParams, BenchParams> params;
    Json raw;
    std::string hash;
};

// Parses TOML (.toml) or JSON (anything else) into the shared schema and validates it fully.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const Json& doc);
Json toml_to_json(const std::string& text);

LossSpec parse_loss(const Json& j, const std::string& where);
Json loss_to_json(const LossSpec& spec);

// FNV-1a over the canonical (sorted-key) JSON text.
std::string config_hash(const Json& doc);

} // namespace noiselab
