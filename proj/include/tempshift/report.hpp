#pragma once

#include "json.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace tempshift {

/// One trained-and-scored configuration. `row` and `column` place it in the
/// grid (e.g. row "W=6 S=2", column "intensity").
struct MetricRow {
    std::string row;
    std::string column;
    std::string family;
    std::string fusion; // empty for single-modality families
    std::string loss;   // "reconstruction", "prediction", "temporal shift", or a loss mode
    std::vector<std::string> modalities;
    int input_len = 0;
    int shift = 0;
    double roc = 0.0;
    double pr = 0.0;
    double no_skill = 0.0;
    std::size_t frames = 0;
    std::size_t positives = 0;
    double final_loss = 0.0;
    std::string checkpoint;
    std::string status = "ok"; // anything else is a failure message

    bool ok() const noexcept { return status == "ok"; }
    /// Field-wise; NaN metrics of failed rows compare equal.
    bool operator==(const MetricRow& other) const;
};

struct Report {
    std::string kind; // run, sweep, compare-losses, compare-fusion, score
    nlohmann::json config;
    std::string config_hash;
    std::string dataset_hash;
    std::vector<MetricRow> rows;
    std::vector<std::string> warnings;

    /// Rows in first-seen order.
    std::vector<std::string> row_labels() const;
    std::vector<std::string> column_labels() const;
    const MetricRow* find(const std::string& row, const std::string& column) const;

    nlohmann::json to_json() const;
    static Report from_json(const nlohmann::json& j);
    std::string to_csv() const;
    /// Grid with "ROC / PR" cells and a no-skill line per column.
    std::string to_text() const;

    bool operator==(const Report&) const = default;
};

} // namespace tempshift
