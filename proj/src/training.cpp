#include "tempshift/training.hpp"

#include "tempshift/errors.hpp"
#include "tempshift/nn/fpenv.hpp"
#include "tempshift/random.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tempshift {

namespace {

VolumeShape volume_of(const Model& model) {
    const auto& s = model.spec();
    return {static_cast<std::size_t>(s.input_frames), static_cast<std::size_t>(s.height),
            static_cast<std::size_t>(s.width)};
}

void check_groups(std::span<const ClipGroup> groups) {
    for (const auto& g : groups) {
        if (g.empty()) throw DataError("training: empty clip group");
        for (const auto* c : g) {
            if (c->length() != g.front()->length()) {
                throw DataError("clip '" + c->clip_id + "': modalities differ in length");
            }
        }
    }
}

} // namespace

std::vector<WindowRef> enumerate_windows(std::span<const ClipGroup> groups, const WindowSpec& spec) {
    check_groups(groups);
    std::vector<WindowRef> out;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        for (const auto& p : enumerate_pairs(groups[gi].front()->length(), spec)) {
            out.push_back({gi, p.start});
        }
    }
    return out;
}

Batch make_batch(std::span<const ClipGroup> groups, std::span<const WindowRef> windows,
                 const WindowSpec& spec) {
    if (windows.empty()) throw InternalError("make_batch: no windows");
    const std::size_t modalities = groups[windows.front().group].size();
    const VideoClip& first = *groups[windows.front().group].front();
    const int h = first.height;
    const int w = first.width;
    const int frames = spec.input_len;
    const auto n = static_cast<int>(windows.size());
    const std::size_t fs = first.frame_size();

    Batch b;
    for (std::size_t m = 0; m < modalities; ++m) {
        nn::Tensor in(nn::Shape{n, 1, frames, h, w});
        nn::Tensor tg(nn::Shape{n, 1, frames, h, w});
        for (int i = 0; i < n; ++i) {
            const WindowRef& r = windows[static_cast<std::size_t>(i)];
            const VideoClip& clip = *groups[r.group].at(m);
            if (clip.height != h || clip.width != w) {
                throw DataError("clip '" + clip.clip_id + "': frame size differs within batch");
            }
            if (r.start + static_cast<std::size_t>(spec.total_len()) > clip.length()) {
                throw InternalError("make_batch: window past end of clip '" + clip.clip_id + "'");
            }
            auto is = in.sample(i);
            auto ts = tg.sample(i);
            const float* src_in = clip.frames.data() + r.start * fs;
            const float* src_tg = clip.frames.data() + (r.start + spec.shift) * fs;
            std::copy(src_in, src_in + frames * fs, is.begin());
            std::copy(src_tg, src_tg + frames * fs, ts.begin());
        }
        b.inputs.push_back(std::move(in));
        b.targets.push_back(std::move(tg));
    }
    return b;
}

double batch_loss(const Model& model, const Batch& batch, const WindowSpec& spec, LossMode mode,
                  const std::optional<LossWeights>& weights) {
    const auto outputs = model.predict(batch.inputs);
    const VolumeShape vs = volume_of(model);
    const int n = batch.inputs.front().shape().n;
    double total = 0.0;
    for (std::size_t m = 0; m < outputs.size(); ++m) {
        for (int i = 0; i < n; ++i) {
            total += masked_loss<float>(outputs[m].sample(i), batch.targets[m].sample(i), vs, spec,
                                        mode, weights);
        }
    }
    return total / n;
}

double train_step(Model& model, nn::Adam& optimizer, const Batch& batch, const WindowSpec& spec,
                  LossMode mode, const std::optional<LossWeights>& weights) {
    const VolumeShape vs = volume_of(model);
    const int n = batch.inputs.front().shape().n;

    model.zero_grad();
    nn::Graph g;
    std::vector<nn::Var> inputs;
    for (const auto& t : batch.inputs) inputs.push_back(g.constant_ref(t));
    const ForwardResult res = model.forward(g, inputs);

    double total = 0.0;
    for (std::size_t m = 0; m < res.outputs.size(); ++m) {
        const nn::Tensor& out = g.value(res.outputs[m]);
        nn::Tensor seed(out.shape());
        for (int i = 0; i < n; ++i) {
            total += masked_loss<float>(out.sample(i), batch.targets[m].sample(i), vs, spec, mode,
                                        weights);
            const auto grad = masked_loss_gradient<float>(out.sample(i), batch.targets[m].sample(i),
                                                          vs, spec, mode, weights);
            auto dst = seed.sample(i);
            for (std::size_t k = 0; k < grad.size(); ++k) dst[k] = grad[k] / static_cast<float>(n);
        }
        g.backward(res.outputs[m], seed);
    }
    total /= n;
    if (!std::isfinite(total)) return total;
    optimizer.step();
    return total;
}

void init_output_bias(Model& model, std::span<const ClipGroup> train_groups) {
    const auto names = model.output_bias_names();
    for (std::size_t m = 0; m < names.size(); ++m) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& g : train_groups) {
            for (float v : g.at(m)->frames) sum += v;
            count += g.at(m)->frames.size();
        }
        if (count == 0) continue;
        const double mean = std::clamp(sum / static_cast<double>(count), 0.01, 0.99);
        nn::Parameter* bias = model.find_parameter(names[m]);
        if (!bias) throw InternalError("init_output_bias: no parameter '" + names[m] + "'");
        bias->value.fill(static_cast<float>(std::log(mean / (1.0 - mean))));
    }
}

TrainingHistory train_model(Model& model, std::span<const ClipGroup> train_groups,
                            const WindowSpec& spec, const TrainingOptions& options,
                            TrainingAudit* audit, const std::function<void(int, double)>& on_epoch) {
    spec.validate();
    nn::flush_denormals();
    if (options.epochs < 0 || options.batch_size < 1 || !(options.learning_rate > 0.0)) {
        throw ConfigError("training: epochs >= 0, batch_size >= 1 and learning_rate > 0 required");
    }
    for (const auto& g : train_groups) {
        if (static_cast<int>(g.size()) != model.num_modalities()) {
            throw DataError("training: clip group has " + std::to_string(g.size()) +
                            " modalities, model takes " + std::to_string(model.num_modalities()));
        }
        for (const auto* c : g) {
            if (audit) audit->touched.insert(c->clip_id);
            if (c->height != model.spec().height || c->width != model.spec().width) {
                throw DataError("clip '" + c->clip_id + "': frame size does not match the model");
            }
        }
    }

    std::vector<WindowRef> windows = enumerate_windows(train_groups, spec);
    if (windows.empty()) {
        throw DataError("training: no clip is long enough for a window of " +
                        std::to_string(spec.total_len()) + " frames");
    }

    if (options.prior_output_bias) init_output_bias(model, train_groups);
    nn::Adam optimizer(model.parameters(), nn::AdamOptions{options.learning_rate});
    Rng rng(derive_seed(options.seed, "batch-order"));
    TrainingHistory history;
    const auto bs = static_cast<std::size_t>(options.batch_size);
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(windows.begin(), windows.end());
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < windows.size(); i += bs) {
            const std::size_t end = std::min(windows.size(), i + bs);
            const std::span<const WindowRef> chunk(windows.data() + i, end - i);
            const Batch batch = make_batch(train_groups, chunk, spec);
            const double loss = train_step(model, optimizer, batch, spec, options.loss_mode,
                                           options.loss_weights);
            if (!std::isfinite(loss)) {
                std::ostringstream os;
                os << "training diverged: non-finite loss " << loss << " at epoch " << epoch + 1
                   << ", step " << history.steps + 1 << " (learning rate "
                   << options.learning_rate << ", batch of " << chunk.size() << ")";
                throw TrainingError(os.str());
            }
            sum += loss * static_cast<double>(chunk.size());
            count += chunk.size();
            ++history.steps;
        }
        history.epoch_loss.push_back(sum / static_cast<double>(count));
        if (on_epoch) on_epoch(epoch + 1, history.epoch_loss.back());
    }
    return history;
}

} // namespace tempshift
