#include "tempshift/scoring.hpp"

#include "tempshift/errors.hpp"
#include "tempshift/nn/fpenv.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace tempshift {

WindowPredictor model_predictor(const Model& model) {
    return [&model](std::span<const nn::Tensor> inputs, std::span<const ShiftedPair>) {
        return model.predict(inputs);
    };
}

FrameScores score_clip(const WindowPredictor& predictor, const ClipGroup& clip,
                       const WindowSpec& spec, const ScoringOptions& options) {
    spec.validate();
    if (clip.empty()) throw DataError("score_clip: empty clip group");
    const VideoClip& first = *clip.front();
    const std::size_t T = first.length();
    if (T < static_cast<std::size_t>(spec.total_len())) {
        throw DataError("clip '" + first.clip_id + "': " + std::to_string(T) +
                        " frames, shorter than the window of " + std::to_string(spec.total_len()));
    }
    if (options.positions == LossMode::PredOnly && spec.shift == 0) {
        throw ConfigError("scoring: pred-only positions need shift > 0");
    }
    if (options.positions == LossMode::ReconOnly && spec.shift == spec.input_len) {
        throw ConfigError("scoring: recon-only positions need shift < input_len");
    }

    const auto pairs = enumerate_pairs(T, spec);
    std::vector<ClipGroup> groups{clip};
    const VolumeShape vs{static_cast<std::size_t>(spec.input_len),
                         static_cast<std::size_t>(first.height),
                         static_cast<std::size_t>(first.width)};
    FrameScoreAccumulator acc(T, options.aggregation);
    const auto bs = static_cast<std::size_t>(std::max(1, options.batch_size));

    for (std::size_t i = 0; i < pairs.size(); i += bs) {
        const std::size_t end = std::min(pairs.size(), i + bs);
        std::vector<WindowRef> refs;
        for (std::size_t k = i; k < end; ++k) refs.push_back({0, pairs[k].start});
        const Batch batch = make_batch(groups, refs, spec);
        const std::span<const ShiftedPair> batch_pairs(pairs.data() + i, end - i);
        const auto outputs = predictor(batch.inputs, batch_pairs);
        if (outputs.size() != batch.targets.size()) {
            throw InternalError("score_clip: predictor returned " + std::to_string(outputs.size()) +
                                " volumes for " + std::to_string(batch.targets.size()) +
                                " modalities");
        }
        for (std::size_t k = 0; k < batch_pairs.size(); ++k) {
            std::vector<double> errors(static_cast<std::size_t>(spec.input_len), 0.0);
            for (std::size_t m = 0; m < outputs.size(); ++m) {
                const auto e = frame_errors<float>(outputs[m].sample(static_cast<int>(k)),
                                                   batch.targets[m].sample(static_cast<int>(k)), vs);
                for (std::size_t j = 0; j < e.size(); ++j) errors[j] += e[j];
            }
            const ShiftedPair& p = batch_pairs[k];
            if (options.positions == LossMode::Full) {
                acc.add(p, errors);
                continue;
            }
            const auto& keep =
                options.positions == LossMode::PredOnly ? p.pred_positions : p.recon_positions;
            ShiftedPair restricted = p;
            restricted.target_indices.clear();
            std::vector<double> kept;
            for (std::size_t pos : keep) {
                restricted.target_indices.push_back(p.target_indices[pos]);
                kept.push_back(errors[pos]);
            }
            acc.add(restricted, kept);
        }
    }
    return acc.finish();
}

FrameScores score_clip(const Model& model, const ClipGroup& clip, const WindowSpec& spec,
                       const ScoringOptions& options) {
    return score_clip(model_predictor(model), clip, spec, options);
}

TestScoring score_test_set(const WindowPredictor& predictor, std::span<const ClipGroup> test,
                           const WindowSpec& spec, const ScoringOptions& options, int workers) {
    spec.validate();
    std::vector<std::optional<FrameScores>> results(test.size());
    std::vector<std::string> skipped(test.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        nn::flush_denormals();
        for (std::size_t i = next++; i < test.size(); i = next++) {
            const VideoClip& c = *test[i].front();
            if (c.length() < static_cast<std::size_t>(spec.total_len())) {
                skipped[i] = "clip '" + c.clip_id + "' skipped: " + std::to_string(c.length()) +
                             " frames, window needs " + std::to_string(spec.total_len());
                continue;
            }
            try {
                results[i] = score_clip(predictor, test[i], spec, options);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int n_threads = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(1, test.size())));
    if (n_threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    TestScoring out;
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (!skipped[i].empty()) {
            out.warnings.push_back(skipped[i]);
            continue;
        }
        const VideoClip& c = *test[i].front();
        if (!c.labels) throw DataError("clip '" + c.clip_id + "': test clip without labels");
        const FrameScores& fsc = *results[i];
        out.trace.clip_boundaries.push_back(out.trace.size());
        for (std::size_t f = 0; f < fsc.score.size(); ++f) {
            if (!fsc.scored[f]) continue;
            out.trace.scores.push_back(fsc.score[f]);
            out.trace.labels.push_back((*c.labels)[f]);
            out.trace.coverage.push_back(fsc.count[f]);
        }
        out.clips.push_back({c.clip_id, fsc});
    }
    out.trace.validate();
    return out;
}

TestScoring score_test_set(const Model& model, std::span<const ClipGroup> test,
                           const WindowSpec& spec, const ScoringOptions& options, int workers) {
    return score_test_set(model_predictor(model), test, spec, options, workers);
}

} // namespace tempshift
