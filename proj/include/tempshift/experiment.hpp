#pragma once

#include "tempshift/config.hpp"
#include "tempshift/report.hpp"
#include "tempshift/scoring.hpp"
#include "tempshift/training.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tempshift {

using Progress = std::function<void(const std::string&)>;

/// Synthetic data from the config seed, or the manifest's clips. Throws
/// DataError if a train clip carries anomalous frames, ConfigError if a
/// window does not fit the shortest clip.
DatasetSplit load_dataset(const ExperimentConfig& config);

/// Modalities a run uses: the configured list, else every modality present
/// (in first-seen order).
std::vector<std::string> resolve_modalities(const ExperimentConfig& config,
                                            const DatasetSplit& data);

/// Clips of the selected modalities grouped per model input. Owns copies so
/// the groups stay valid for its lifetime.
class GroupedClips {
public:
    GroupedClips(const DatasetSplit& data, const std::vector<std::string>& modalities);
    GroupedClips(const GroupedClips&) = delete;
    GroupedClips& operator=(const GroupedClips&) = delete;

    const std::vector<ClipGroup>& train() const noexcept { return train_; }
    const std::vector<ClipGroup>& test() const noexcept { return test_; }
    std::vector<std::string> test_ids() const;

private:
    std::vector<DatasetSplit> parts_;
    std::vector<ClipGroup> train_;
    std::vector<ClipGroup> test_;
};

/// One model trained and scored.
struct TrialSpec {
    std::string row;
    std::string column;
    std::string loss_label;
    Family family = Family::Cae3d;
    Fusion fusion = Fusion::Add;
    WindowSpec window;
    LossMode mode = LossMode::Full;
    std::vector<std::string> modalities;
};

struct TrialResult {
    MetricRow row;
    std::unique_ptr<Model> model;
    TestScoring scoring;
    TrainingHistory history;
    TrainingAudit audit;
};

/// Trains on the train split only, then scores the test split. Throws
/// DataError if the split is invalid (e.g. anomalous train frames). The audit of
/// touched clips is checked against the test ids before scoring.
TrialResult run_trial(const ExperimentConfig& config, const DatasetSplit& data,
                      const TrialSpec& trial, const Progress& progress = {});

/// Single run: one model per modality (or one per modality pair for the
/// multimodal family). Writes checkpoints, reports, scores and plots.
Report run(const ExperimentConfig& config, const Progress& progress = {});

/// One run per (W, S) in config.sweep_pairs on shared data and seeds.
Report sweep_windows(const ExperimentConfig& config, const Progress& progress = {});

/// Reconstruction (W+S, 0), prediction (W, S, pred-only) and temporal shift
/// (W, S, full) for 3dcae; reconstruction and temporal shift for attention-unet.
Report compare_losses(const ExperimentConfig& config, const Progress& progress = {});

/// {concat, add, multiply} x {reconstruction, temporal shift} on a modality pair.
Report compare_fusion(const ExperimentConfig& config, const Progress& progress = {});

/// Re-scores a saved checkpoint against the configured data (or `manifest`).
Report score_checkpoint(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                        const std::optional<std::filesystem::path>& manifest = std::nullopt,
                        const Progress& progress = {});

/// metrics.{json,csv,txt} per the configured formats, plus config.resolved.json.
void write_report(const Report& report, const ExperimentConfig& config);

/// One "score label" line per scored frame.
void write_scores(const std::filesystem::path& path, const ScoreTrace& trace);

} // namespace tempshift
