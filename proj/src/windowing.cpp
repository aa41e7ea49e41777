#include "tempshift/windowing.hpp"

#include "tempshift/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace tempshift {

void WindowSpec::validate() const {
    if (input_len < 1) {
        throw ConfigError("window: input_len must be >= 1, got " + std::to_string(input_len));
    }
    if (shift < 0 || shift > input_len) {
        throw ConfigError("window: shift must be in [0, input_len], got shift=" +
                          std::to_string(shift) + " input_len=" + std::to_string(input_len));
    }
    if (stride < 1) {
        throw ConfigError("window: stride must be >= 1, got " + std::to_string(stride));
    }
}

Aggregation parse_aggregation(const std::string& name) {
    if (name == "per-frame") return Aggregation::PerFrame;
    if (name == "window-mean") return Aggregation::WindowMean;
    throw ConfigError("unknown aggregation '" + name + "' (per-frame, window-mean)");
}

std::string to_string(Aggregation mode) {
    return mode == Aggregation::PerFrame ? "per-frame" : "window-mean";
}

PositionClasses classify_positions(const WindowSpec& spec) {
    spec.validate();
    const auto w = static_cast<std::size_t>(spec.input_len);
    const auto s = static_cast<std::size_t>(spec.shift);
    PositionClasses out;
    out.recon.resize(w - s);
    out.pred.resize(s);
    std::iota(out.recon.begin(), out.recon.end(), std::size_t{0});
    std::iota(out.pred.begin(), out.pred.end(), w - s);
    return out;
}

std::size_t count_pairs(std::size_t clip_len, const WindowSpec& spec) {
    spec.validate();
    const auto total = static_cast<std::size_t>(spec.total_len());
    if (clip_len < total) {
        return 0;
    }
    return (clip_len - total) / static_cast<std::size_t>(spec.stride) + 1;
}

std::vector<ShiftedPair> enumerate_pairs(std::size_t clip_len, const WindowSpec& spec) {
    const std::size_t n = count_pairs(clip_len, spec);
    const auto classes = classify_positions(spec);
    const auto w = static_cast<std::size_t>(spec.input_len);
    const auto s = static_cast<std::size_t>(spec.shift);

    std::vector<ShiftedPair> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ShiftedPair p;
        p.start = i * static_cast<std::size_t>(spec.stride);
        p.input_indices.resize(w);
        p.target_indices.resize(w);
        std::iota(p.input_indices.begin(), p.input_indices.end(), p.start);
        std::iota(p.target_indices.begin(), p.target_indices.end(), p.start + s);
        p.recon_positions = classes.recon;
        p.pred_positions = classes.pred;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::size_t FrameScores::num_scored() const noexcept {
    return static_cast<std::size_t>(std::count(scored.begin(), scored.end(), true));
}

FrameScoreAccumulator::FrameScoreAccumulator(std::size_t clip_len, Aggregation mode)
    : mode_(mode), sum_(clip_len, 0.0), count_(clip_len, 0) {}

void FrameScoreAccumulator::add(const ShiftedPair& pair, std::span<const double> frame_errors) {
    if (frame_errors.size() != pair.target_indices.size()) {
        throw DataError("aggregate: window " + std::to_string(pair.start) + " has " +
                        std::to_string(frame_errors.size()) + " errors for " +
                        std::to_string(pair.target_indices.size()) + " target frames");
    }
    double window_mean = 0.0;
    if (mode_ == Aggregation::WindowMean && !frame_errors.empty()) {
        window_mean = std::accumulate(frame_errors.begin(), frame_errors.end(), 0.0) /
                      static_cast<double>(frame_errors.size());
    }
    for (std::size_t k = 0; k < pair.target_indices.size(); ++k) {
        const std::size_t f = pair.target_indices[k];
        if (f >= sum_.size()) {
            throw DataError("aggregate: target frame " + std::to_string(f) +
                            " outside clip of length " + std::to_string(sum_.size()));
        }
        sum_[f] += mode_ == Aggregation::PerFrame ? frame_errors[k] : window_mean;
        ++count_[f];
    }
}

FrameScores FrameScoreAccumulator::finish() const {
    FrameScores out;
    const std::size_t n = sum_.size();
    out.score.assign(n, 0.0);
    out.count = count_;
    out.scored.assign(n, false);
    for (std::size_t f = 0; f < n; ++f) {
        if (count_[f] > 0) {
            out.score[f] = sum_[f] / static_cast<double>(count_[f]);
            out.scored[f] = true;
        }
    }
    return out;
}

FrameScores aggregate_frame_scores(
    std::span<const std::pair<ShiftedPair, std::vector<double>>> pair_errors,
    std::size_t clip_len,
    Aggregation mode) {
    FrameScoreAccumulator acc(clip_len, mode);
    for (const auto& [pair, errors] : pair_errors) {
        acc.add(pair, errors);
    }
    return acc.finish();
}

} // namespace tempshift
