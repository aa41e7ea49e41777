#include "tempshift/losses.hpp"

#include "tempshift/errors.hpp"

namespace tempshift {

namespace {

template <typename T>
void check_shapes(std::span<const T> output, std::span<const T> target,
                  const VolumeShape& shape, const WindowSpec& spec) {
    spec.validate();
    if (output.size() != target.size()) {
        throw DataError("loss: output has " + std::to_string(output.size()) +
                        " elements, target has " + std::to_string(target.size()));
    }
    if (output.size() != shape.size()) {
        throw DataError("loss: volume has " + std::to_string(output.size()) +
                        " elements, shape implies " + std::to_string(shape.size()));
    }
    if (shape.frames != static_cast<std::size_t>(spec.input_len)) {
        throw DataError("loss: volume has " + std::to_string(shape.frames) +
                        " frames, window expects " + std::to_string(spec.input_len));
    }
}

LossWeights resolve_weights(const WindowSpec& spec, std::optional<LossWeights> weights) {
    if (weights) {
        if (weights->recon < 0.0 || weights->pred < 0.0) {
            throw ConfigError("loss: weights must be non-negative");
        }
        LossWeights w = *weights;
        // An empty class contributes nothing regardless of its weight.
        if (spec.shift == 0) w.pred = 0.0;
        if (spec.shift == spec.input_len) w.recon = 0.0;
        return w;
    }
    const double n = spec.input_len;
    return {(n - spec.shift) / n, spec.shift / n};
}

template <typename T>
double sum_sq(std::span<const T> a, std::span<const T> b, std::size_t begin, std::size_t end) {
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

} // namespace

LossMode parse_loss_mode(const std::string& name) {
    if (name == "full") return LossMode::Full;
    if (name == "recon-only") return LossMode::ReconOnly;
    if (name == "pred-only") return LossMode::PredOnly;
    throw ConfigError("loss: unknown mode '" + name + "' (expected full, recon-only, pred-only)");
}

std::string to_string(LossMode mode) {
    switch (mode) {
    case LossMode::Full: return "full";
    case LossMode::ReconOnly: return "recon-only";
    case LossMode::PredOnly: return "pred-only";
    }
    return "?";
}

template <typename T>
LossBreakdown temporal_shift_loss(std::span<const T> output, std::span<const T> target,
                                  const VolumeShape& shape, const WindowSpec& spec,
                                  std::optional<LossWeights> weights) {
    check_shapes(output, target, shape, spec);
    const std::size_t fs = shape.frame_size();
    const std::size_t n_recon = static_cast<std::size_t>(spec.input_len - spec.shift);
    const std::size_t n_pred = static_cast<std::size_t>(spec.shift);
    const LossWeights w = resolve_weights(spec, weights);

    LossBreakdown out;
    out.recon_weight = w.recon;
    out.pred_weight = w.pred;
    if (n_recon > 0 && fs > 0) {
        out.recon_component =
            sum_sq(output, target, 0, n_recon * fs) / static_cast<double>(n_recon * fs);
    }
    if (n_pred > 0 && fs > 0) {
        out.pred_component = sum_sq(output, target, n_recon * fs, shape.size()) /
                             static_cast<double>(n_pred * fs);
    }
    out.total = w.recon * out.recon_component + w.pred * out.pred_component;
    return out;
}

template <typename T>
double masked_loss(std::span<const T> output, std::span<const T> target,
                   const VolumeShape& shape, const WindowSpec& spec, LossMode mode,
                   std::optional<LossWeights> weights) {
    if (mode == LossMode::PredOnly && spec.shift == 0) {
        throw ConfigError("loss: pred-only mode needs shift > 0 (no predicted positions)");
    }
    if (mode == LossMode::ReconOnly && spec.shift == spec.input_len) {
        throw ConfigError("loss: recon-only mode needs shift < input_len (no reconstructed positions)");
    }
    const LossBreakdown b = temporal_shift_loss(output, target, shape, spec, weights);
    switch (mode) {
    case LossMode::Full: return b.total;
    case LossMode::ReconOnly: return b.recon_component;
    case LossMode::PredOnly: return b.pred_component;
    }
    return b.total;
}

template <typename T>
std::vector<T> masked_loss_gradient(std::span<const T> output, std::span<const T> target,
                                    const VolumeShape& shape, const WindowSpec& spec,
                                    LossMode mode, std::optional<LossWeights> weights) {
    // Validates geometry and mode.
    (void)masked_loss(output, target, shape, spec, mode, weights);

    const std::size_t fs = shape.frame_size();
    const std::size_t n_recon = static_cast<std::size_t>(spec.input_len - spec.shift);
    const std::size_t n_pred = static_cast<std::size_t>(spec.shift);
    const LossWeights w = resolve_weights(spec, weights);

    double recon_scale = 0.0;
    double pred_scale = 0.0;
    switch (mode) {
    case LossMode::Full:
        if (n_recon > 0) recon_scale = w.recon / static_cast<double>(n_recon * fs);
        if (n_pred > 0) pred_scale = w.pred / static_cast<double>(n_pred * fs);
        break;
    case LossMode::ReconOnly:
        recon_scale = 1.0 / static_cast<double>(n_recon * fs);
        break;
    case LossMode::PredOnly:
        pred_scale = 1.0 / static_cast<double>(n_pred * fs);
        break;
    }

    std::vector<T> grad(output.size());
    const std::size_t split = n_recon * fs;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double scale = i < split ? recon_scale : pred_scale;
        grad[i] = static_cast<T>(2.0 * scale *
                                 (static_cast<double>(output[i]) - static_cast<double>(target[i])));
    }
    return grad;
}

template <typename T>
std::vector<double> frame_errors(std::span<const T> output, std::span<const T> target,
                                 const VolumeShape& shape) {
    if (output.size() != shape.size() || target.size() != shape.size()) {
        throw DataError("frame_errors: volume sizes do not match shape");
    }
    const std::size_t fs = shape.frame_size();
    std::vector<double> errs(shape.frames, 0.0);
    for (std::size_t f = 0; f < shape.frames; ++f) {
        errs[f] = fs == 0 ? 0.0 : sum_sq(output, target, f * fs, (f + 1) * fs) / static_cast<double>(fs);
    }
    return errs;
}

#define TEMPSHIFT_INSTANTIATE(T)                                                              \
    template LossBreakdown temporal_shift_loss<T>(std::span<const T>, std::span<const T>,     \
                                                  const VolumeShape&, const WindowSpec&,      \
                                                  std::optional<LossWeights>);                \
    template double masked_loss<T>(std::span<const T>, std::span<const T>, const VolumeShape&, \
                                   const WindowSpec&, LossMode, std::optional<LossWeights>);  \
    template std::vector<T> masked_loss_gradient<T>(std::span<const T>, std::span<const T>,   \
                                                    const VolumeShape&, const WindowSpec&,    \
                                                    LossMode, std::optional<LossWeights>);    \
    template std::vector<double> frame_errors<T>(std::span<const T>, std::span<const T>,      \
                                                 const VolumeShape&);

TEMPSHIFT_INSTANTIATE(float)
TEMPSHIFT_INSTANTIATE(double)

#undef TEMPSHIFT_INSTANTIATE

} // namespace tempshift
