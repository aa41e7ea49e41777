#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tempshift {

/// Per-frame scores of a whole test set, concatenated clip after clip.
/// Frames without any covering window are not part of the trace.
struct ScoreTrace {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    std::vector<std::size_t> clip_boundaries; // start offset of each clip
    std::vector<std::size_t> coverage;

    std::size_t size() const noexcept { return scores.size(); }
    std::size_t num_positive() const noexcept;

    /// Throws DataError on misaligned vectors or non-finite scores.
    void validate() const;

    void append(const ScoreTrace& other);
};

/// Probability that a random positive outscores a random negative, ties counted 1/2.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);
double roc_auc(const ScoreTrace& trace);

/// Average precision: sum over descending thresholds of recall gain x precision.
double pr_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);
double pr_auc(const ScoreTrace& trace);

/// Positive prevalence, the precision of a random ranking.
double no_skill_pr(std::span<const std::uint8_t> labels);

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
};

/// (fpr, tpr) at every distinct threshold, from (0,0) to (1,1).
std::vector<CurvePoint> roc_curve(std::span<const double> scores,
                                  std::span<const std::uint8_t> labels);

/// (recall, precision) at every distinct threshold, highest threshold first.
std::vector<CurvePoint> pr_curve(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels);

} // namespace tempshift
