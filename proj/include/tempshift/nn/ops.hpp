#pragma once

#include "tempshift/nn/graph.hpp"

#include <array>

namespace tempshift::nn {

/// Stride and zero padding per (depth, height, width) axis.
struct ConvGeometry {
    std::array<int, 3> stride{1, 1, 1};
    std::array<int, 3> pad{1, 1, 1};
};

/// x: (N, C, D, H, W); weight: (O, C, kd, kh, kw); bias: (1, O, 1, 1, 1) or invalid Var.
Var conv3d(Graph& g, Var x, Var weight, Var bias, const ConvGeometry& geom);

/// Adjoint of conv3d. weight: (C_in, C_out, kd, kh, kw). Output extent per axis is
/// (in - 1) * stride - 2 * pad + k + output_padding.
Var conv_transpose3d(Graph& g, Var x, Var weight, Var bias, const ConvGeometry& geom,
                     std::array<int, 3> output_padding);

Var leaky_relu(Graph& g, Var x, float slope);
Var sigmoid(Graph& g, Var x);
Var add(Graph& g, Var a, Var b);
Var multiply(Graph& g, Var a, Var b);
Var concat_channels(Graph& g, Var a, Var b);

/// Bilinear resampling of the (H, W) plane of every (n, c, d) slice,
/// half-pixel centres. Identity when the size already matches.
Var resize_bilinear(Graph& g, Var x, int height, int width);

/// Softmax along one of the axes 1..4 (C, D, H, W).
Var softmax(Graph& g, Var x, int axis);

/// x * mask, with the single-channel mask broadcast over x's channels.
Var scale_by_mask(Graph& g, Var x, Var mask);

} // namespace tempshift::nn
