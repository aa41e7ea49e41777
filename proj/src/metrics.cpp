#include "tempshift/metrics.hpp"

#include "tempshift/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tempshift {

namespace {

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw DataError("metrics: " + std::to_string(scores.size()) + " scores for " +
                        std::to_string(labels.size()) + " labels");
    }
    for (double s : scores) {
        if (!std::isfinite(s)) throw DataError("metrics: non-finite score");
    }
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const std::uint8_t> labels) {
    const auto pos = static_cast<std::size_t>(
        std::count_if(labels.begin(), labels.end(), [](std::uint8_t l) { return l != 0; }));
    return {pos, labels.size() - pos};
}

// Indices sorted by descending score; stable so the order is reproducible.
std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

// Cumulative (tp, fp) after each group of tied scores, in descending order.
template <typename Fn>
void for_each_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels,
                        Fn&& fn) {
    const auto order = descending_order(scores);
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]]) ++tp; else ++fp;
            ++i;
        }
        fn(tp, fp);
    }
}

} // namespace

std::size_t ScoreTrace::num_positive() const noexcept {
    return class_counts(labels).first;
}

void ScoreTrace::validate() const {
    check_inputs(scores, labels);
    if (!coverage.empty() && coverage.size() != scores.size()) {
        throw DataError("score trace: coverage has " + std::to_string(coverage.size()) +
                        " entries for " + std::to_string(scores.size()) + " scores");
    }
    for (std::size_t b : clip_boundaries) {
        if (b > scores.size()) throw DataError("score trace: clip boundary out of range");
    }
}

void ScoreTrace::append(const ScoreTrace& other) {
    const std::size_t offset = scores.size();
    scores.insert(scores.end(), other.scores.begin(), other.scores.end());
    labels.insert(labels.end(), other.labels.begin(), other.labels.end());
    coverage.insert(coverage.end(), other.coverage.begin(), other.coverage.end());
    for (std::size_t b : other.clip_boundaries) clip_boundaries.push_back(b + offset);
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_inputs(scores, labels);
    const auto [n_pos, n_neg] = class_counts(labels);
    if (n_pos == 0 || n_neg == 0) {
        throw MetricError("roc_auc: needs at least one positive and one negative label");
    }
    // Mann-Whitney U with mid-ranks for ties.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) rank_sum += mid_rank;
        }
        i = j;
    }
    const double p = static_cast<double>(n_pos);
    const double n = static_cast<double>(n_neg);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double roc_auc(const ScoreTrace& trace) {
    return roc_auc(trace.scores, trace.labels);
}

double pr_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_inputs(scores, labels);
    const auto n_pos = class_counts(labels).first;
    if (n_pos == 0) {
        throw MetricError("pr_auc: needs at least one positive label");
    }
    double ap = 0.0;
    std::size_t prev_tp = 0;
    for_each_threshold(scores, labels, [&](std::size_t tp, std::size_t fp) {
        if (tp > prev_tp) {
            const double recall_gain =
                static_cast<double>(tp - prev_tp) / static_cast<double>(n_pos);
            ap += recall_gain * static_cast<double>(tp) / static_cast<double>(tp + fp);
        }
        prev_tp = tp;
    });
    return ap;
}

double pr_auc(const ScoreTrace& trace) {
    return pr_auc(trace.scores, trace.labels);
}

double no_skill_pr(std::span<const std::uint8_t> labels) {
    if (labels.empty()) return 0.0;
    return static_cast<double>(class_counts(labels).first) / static_cast<double>(labels.size());
}

std::vector<CurvePoint> roc_curve(std::span<const double> scores,
                                  std::span<const std::uint8_t> labels) {
    check_inputs(scores, labels);
    const auto [n_pos, n_neg] = class_counts(labels);
    if (n_pos == 0 || n_neg == 0) {
        throw MetricError("roc_curve: needs both classes");
    }
    std::vector<CurvePoint> pts{{0.0, 0.0}};
    for_each_threshold(scores, labels, [&](std::size_t tp, std::size_t fp) {
        pts.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                       static_cast<double>(tp) / static_cast<double>(n_pos)});
    });
    return pts;
}

std::vector<CurvePoint> pr_curve(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels) {
    check_inputs(scores, labels);
    const auto n_pos = class_counts(labels).first;
    if (n_pos == 0) {
        throw MetricError("pr_curve: needs at least one positive label");
    }
    std::vector<CurvePoint> pts;
    for_each_threshold(scores, labels, [&](std::size_t tp, std::size_t fp) {
        pts.push_back({static_cast<double>(tp) / static_cast<double>(n_pos),
                       static_cast<double>(tp) / static_cast<double>(tp + fp)});
    });
    return pts;
}

} // namespace tempshift
