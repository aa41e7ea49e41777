#pragma once

#include "tempshift/data.hpp"
#include "tempshift/models.hpp"
#include "tempshift/training.hpp"
#include "tempshift/windowing.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace tempshift {

struct DatasetConfig {
    std::string source = "synthetic"; // or "manifest"
    SyntheticOptions synthetic;       // frame size and fps come from the model / dataset sections
    std::filesystem::path manifest;
    /// Empty: every modality present (synthetic: intensity, plus inverted for multimodal).
    std::vector<std::string> modalities;
    double fps = 8.0;
};

struct OutputConfig {
    std::filesystem::path directory = "runs/default";
    std::vector<std::string> formats{"json", "csv", "txt"};
    bool plots = true;
    bool dump_scores = true;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    WindowSpec window;
    Aggregation aggregation = Aggregation::PerFrame;
    ModelSpec model;
    TrainingOptions training;
    OutputConfig output;
    std::vector<std::pair<int, int>> sweep_pairs{{8, 0}, {6, 2}, {4, 4}, {4, 1}};
    int workers = 1;
    std::string device = "cpu";

    nlohmann::json to_json() const;
    /// Hash of everything that can change a metric (output and runtime sections excluded).
    std::string hash() const;
    /// Every violated field, one message each.
    std::vector<std::string> problems() const;
    /// Throws ConfigError listing problems().
    void validate() const;
};

/// Parses and validates; unknown keys, wrong types and out-of-range values
/// are collected and reported together in one ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Overrides --seed applies to: training order and model initialisation.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

} // namespace tempshift
