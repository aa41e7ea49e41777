#pragma once

#include "tempshift/losses.hpp"
#include "tempshift/metrics.hpp"
#include "tempshift/training.hpp"
#include "tempshift/windowing.hpp"

#include <functional>
#include <string>
#include <vector>

namespace tempshift {

/// Produces one output volume per modality for a batch of windows.
/// `pairs[i]` describes window i of the batch; inputs are (N, 1, W, H, W_px).
using WindowPredictor = std::function<std::vector<nn::Tensor>(
    std::span<const nn::Tensor> inputs, std::span<const ShiftedPair> pairs)>;

WindowPredictor model_predictor(const Model& model);

struct ScoringOptions {
    /// Full scores every output position; PredOnly / ReconOnly restrict scoring
    /// to that position class.
    LossMode positions = LossMode::Full;
    Aggregation aggregation = Aggregation::PerFrame;
    int batch_size = 16;
};

/// Per-frame anomaly scores of one clip (group): every window is predicted,
/// each output frame's mean squared error against its shifted target is
/// spread onto that target frame, and frames average over their windows.
/// Multi-modal frame errors are summed over modalities.
FrameScores score_clip(const WindowPredictor& predictor, const ClipGroup& clip,
                       const WindowSpec& spec, const ScoringOptions& options = {});
FrameScores score_clip(const Model& model, const ClipGroup& clip, const WindowSpec& spec,
                       const ScoringOptions& options = {});

struct ClipScore {
    std::string clip_id;
    FrameScores frames;
};

struct TestScoring {
    ScoreTrace trace;
    std::vector<ClipScore> clips;
    std::vector<std::string> warnings; // skipped clips
};

/// Scores every test clip group and concatenates the scored frames into one
/// trace. Clips shorter than the window are skipped with a warning.
TestScoring score_test_set(const WindowPredictor& predictor, std::span<const ClipGroup> test,
                           const WindowSpec& spec, const ScoringOptions& options = {},
                           int workers = 1);
TestScoring score_test_set(const Model& model, std::span<const ClipGroup> test,
                           const WindowSpec& spec, const ScoringOptions& options = {},
                           int workers = 1);

} // namespace tempshift
