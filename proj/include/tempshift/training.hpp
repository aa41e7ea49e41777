#pragma once

#include "tempshift/data.hpp"
#include "tempshift/losses.hpp"
#include "tempshift/models.hpp"
#include "tempshift/nn/adam.hpp"
#include "tempshift/windowing.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tempshift {

/// One clip per model input: a single clip, or the aligned clips of two modalities.
using ClipGroup = std::vector<const VideoClip*>;

/// Reference to one window of one clip group.
struct WindowRef {
    std::size_t group = 0;
    std::size_t start = 0;
};

/// Model inputs and shifted targets for a batch, one tensor per modality.
struct Batch {
    std::vector<nn::Tensor> inputs;
    std::vector<nn::Tensor> targets;
};

Batch make_batch(std::span<const ClipGroup> groups, std::span<const WindowRef> windows,
                 const WindowSpec& spec);

/// Every window of every group, in clip order.
std::vector<WindowRef> enumerate_windows(std::span<const ClipGroup> groups, const WindowSpec& spec);

struct TrainingOptions {
    int epochs = 20;
    int batch_size = 16;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    LossMode loss_mode = LossMode::Full;
    std::optional<LossWeights> loss_weights;
    /// Start the output bias at the logit of the mean training pixel.
    bool prior_output_bias = true;
};

/// Records the ids of every clip the trainer reads.
struct TrainingAudit {
    std::set<std::string> touched;
};

struct TrainingHistory {
    std::vector<double> epoch_loss;
    long steps = 0;
};

/// Mean loss over the batch; multi-modal losses are summed over modalities.
double batch_loss(const Model& model, const Batch& batch, const WindowSpec& spec,
                  LossMode mode, const std::optional<LossWeights>& weights = std::nullopt);

/// Forward, backward and one optimiser update; returns the pre-update loss.
double train_step(Model& model, nn::Adam& optimizer, const Batch& batch, const WindowSpec& spec,
                  LossMode mode, const std::optional<LossWeights>& weights = std::nullopt);

/// Sets each modality's output bias to logit(mean training pixel), clamped
/// to [0.01, 0.99]. Otherwise the early updates drag every layer toward the
/// background level together and the sigmoid saturates at zero.
void init_output_bias(Model& model, std::span<const ClipGroup> train_groups);

/// Shuffled mini-batch training over all windows of the given clips. Throws
/// TrainingError when the loss becomes non-finite.
TrainingHistory train_model(Model& model, std::span<const ClipGroup> train_groups,
                            const WindowSpec& spec, const TrainingOptions& options,
                            TrainingAudit* audit = nullptr,
                            const std::function<void(int, double)>& on_epoch = {});

} // namespace tempshift
