#pragma once

#include "tempshift/windowing.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tempshift {

/// Frame-major volume: frames x height x width, contiguous.
struct VolumeShape {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t frame_size() const noexcept { return height * width; }
    std::size_t size() const noexcept { return frames * height * width; }
};

struct LossBreakdown {
    double total = 0.0;
    double recon_component = 0.0;
    double pred_component = 0.0;
    double recon_weight = 0.0;
    double pred_weight = 0.0;
};

enum class LossMode { Full, ReconOnly, PredOnly };

LossMode parse_loss_mode(const std::string& name);
std::string to_string(LossMode mode);

/// Weights on the reconstruction and prediction means. Unset means
/// position-proportional: (W-S)/W and S/W, i.e. a plain mean over the window.
struct LossWeights {
    double recon = 0.0;
    double pred = 0.0;
};

/// Squared-error loss of W output frames against the W shifted targets, split
/// into the part over reconstructed positions and the part over predicted ones.
template <typename T>
LossBreakdown temporal_shift_loss(std::span<const T> output, std::span<const T> target,
                                  const VolumeShape& shape, const WindowSpec& spec,
                                  std::optional<LossWeights> weights = std::nullopt);

/// Full: the weighted total. ReconOnly / PredOnly: mean restricted to that class.
template <typename T>
double masked_loss(std::span<const T> output, std::span<const T> target,
                   const VolumeShape& shape, const WindowSpec& spec, LossMode mode,
                   std::optional<LossWeights> weights = std::nullopt);

/// d masked_loss / d output, same layout as `output`.
template <typename T>
std::vector<T> masked_loss_gradient(std::span<const T> output, std::span<const T> target,
                                    const VolumeShape& shape, const WindowSpec& spec,
                                    LossMode mode,
                                    std::optional<LossWeights> weights = std::nullopt);

/// Mean squared error of each output frame against its target frame.
template <typename T>
std::vector<double> frame_errors(std::span<const T> output, std::span<const T> target,
                                 const VolumeShape& shape);

} // namespace tempshift
