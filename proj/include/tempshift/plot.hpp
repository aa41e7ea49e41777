#pragma once

#include "tempshift/metrics.hpp"

#include <optional>
#include <span>
#include <string>

namespace tempshift {

/// Step curve on the unit square as a standalone SVG document. `reference`
/// draws the chance diagonal; `baseline` a horizontal line at that height.
std::string svg_curve(const std::string& title, const std::string& x_label,
                      const std::string& y_label, std::span<const CurvePoint> points,
                      bool reference, std::optional<double> baseline = std::nullopt);

/// Per-frame scores over the concatenated test frames; labelled frames are
/// shaded and clip boundaries drawn as dashed lines.
std::string svg_timeline(const std::string& title, const ScoreTrace& trace);

} // namespace tempshift
