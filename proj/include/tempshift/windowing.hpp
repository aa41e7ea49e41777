#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tempshift {

/// Geometry of a temporal-shift window: the model sees `input_len` frames
/// starting at t and is scored against `input_len` frames starting at t + shift.
struct WindowSpec {
    int input_len = 6;
    int shift = 2;
    int stride = 1;

    int total_len() const noexcept { return input_len + shift; }

    /// Throws ConfigError unless input_len >= 1, 0 <= shift <= input_len, stride >= 1.
    void validate() const;
};

struct ShiftedPair {
    std::size_t start = 0;
    std::vector<std::size_t> input_indices;
    std::vector<std::size_t> target_indices;
    std::vector<std::size_t> recon_positions;
    std::vector<std::size_t> pred_positions;
};

struct PositionClasses {
    std::vector<std::size_t> recon;
    std::vector<std::size_t> pred;
};

/// Output positions [0, W-S) reproduce input frames; [W-S, W) are future frames.
PositionClasses classify_positions(const WindowSpec& spec);

/// Number of windows that fit a clip of `clip_len` frames.
std::size_t count_pairs(std::size_t clip_len, const WindowSpec& spec);

/// Every window start t with t + L <= clip_len, ascending, stepping by stride.
std::vector<ShiftedPair> enumerate_pairs(std::size_t clip_len, const WindowSpec& spec);

/// How a window's errors are spread onto its target frames.
enum class Aggregation {
    /// Each target frame receives its own output-frame error.
    PerFrame,
    /// Each target frame receives the mean error of the whole window.
    WindowMean,
};

/// "per-frame" or "window-mean".
Aggregation parse_aggregation(const std::string& name);
std::string to_string(Aggregation mode);

struct FrameScores {
    std::vector<double> score;     // 0 where unscored
    std::vector<std::size_t> count;
    std::vector<bool> scored;      // count > 0

    std::size_t num_scored() const noexcept;
};

/// Running per-frame sums over windows of one clip. Single writer.
class FrameScoreAccumulator {
public:
    explicit FrameScoreAccumulator(std::size_t clip_len,
                                   Aggregation mode = Aggregation::PerFrame);

    /// `frame_errors` holds one error per output position of `pair`.
    void add(const ShiftedPair& pair, std::span<const double> frame_errors);

    FrameScores finish() const;

    std::size_t clip_len() const noexcept { return sum_.size(); }

private:
    Aggregation mode_;
    std::vector<double> sum_;
    std::vector<std::size_t> count_;
};

FrameScores aggregate_frame_scores(
    std::span<const std::pair<ShiftedPair, std::vector<double>>> pair_errors,
    std::size_t clip_len,
    Aggregation mode = Aggregation::PerFrame);

} // namespace tempshift
