#include "tempshift/nn/ops.hpp"

#include "tempshift/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>

namespace tempshift::nn {

namespace {

using MatR = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

// Unfolding of a (C, D, H, W) image into (C * kd * kh * kw, od * oh * ow) columns.
struct ColGeometry {
    int c = 0;
    std::array<int, 3> in{};
    std::array<int, 3> k{};
    std::array<int, 3> stride{};
    std::array<int, 3> pad{};
    std::array<int, 3> out{};

    int rows() const { return c * k[0] * k[1] * k[2]; }
    int cols() const { return out[0] * out[1] * out[2]; }
};

template <bool Accumulate>
void unfold(const ColGeometry& g, const float* img,
            std::conditional_t<Accumulate, const float*, float*> col, float* img_out) {
    // Accumulate == false: img -> col.  Accumulate == true: col -> img_out (+=).
    const int in_hw = g.in[1] * g.in[2];
    const int ncols = g.cols();
    int row = 0;
    for (int c = 0; c < g.c; ++c) {
        for (int kd = 0; kd < g.k[0]; ++kd) {
            for (int kh = 0; kh < g.k[1]; ++kh) {
                for (int kw = 0; kw < g.k[2]; ++kw, ++row) {
                    auto* col_row = col + static_cast<std::size_t>(row) * ncols;
                    int j = 0;
                    for (int od = 0; od < g.out[0]; ++od) {
                        const int id = od * g.stride[0] - g.pad[0] + kd;
                        const bool d_ok = id >= 0 && id < g.in[0];
                        for (int oh = 0; oh < g.out[1]; ++oh) {
                            const int ih = oh * g.stride[1] - g.pad[1] + kh;
                            if (!d_ok || ih < 0 || ih >= g.in[1]) {
                                if constexpr (!Accumulate) {
                                    std::fill(col_row + j, col_row + j + g.out[2], 0.0f);
                                }
                                j += g.out[2];
                                continue;
                            }
                            const std::size_t base =
                                (static_cast<std::size_t>(c) * g.in[0] + id) * in_hw +
                                static_cast<std::size_t>(ih) * g.in[2];
                            for (int ow = 0; ow < g.out[2]; ++ow, ++j) {
                                const int iw = ow * g.stride[2] - g.pad[2] + kw;
                                if (iw < 0 || iw >= g.in[2]) {
                                    if constexpr (!Accumulate) col_row[j] = 0.0f;
                                    continue;
                                }
                                if constexpr (Accumulate) {
                                    img_out[base + iw] += col_row[j];
                                } else {
                                    col_row[j] = img[base + iw];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

void im2col(const ColGeometry& g, const float* img, float* col) {
    unfold<false>(g, img, col, nullptr);
}

void col2im(const ColGeometry& g, const float* col, float* img) {
    unfold<true>(g, nullptr, col, img);
}

int conv_out(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw InternalError(std::string(op) + ": shape " + a.shape().str() + " vs " +
                            b.shape().str());
    }
}

void add_bias(Tensor& out, const Tensor& bias) {
    const Shape& s = out.shape();
    const std::size_t vox = s.voxels();
    for (int n = 0; n < s.n; ++n) {
        float* p = out.ptr() + static_cast<std::size_t>(n) * s.sample_size();
        for (int o = 0; o < s.c; ++o) {
            const float b = bias[o];
            for (std::size_t v = 0; v < vox; ++v) p[o * vox + v] += b;
        }
    }
}

void accumulate_bias_grad(const Tensor& dout, Tensor& dbias) {
    const Shape& s = dout.shape();
    const std::size_t vox = s.voxels();
    for (int n = 0; n < s.n; ++n) {
        const float* p = dout.ptr() + static_cast<std::size_t>(n) * s.sample_size();
        for (int o = 0; o < s.c; ++o) {
            double acc = 0.0;
            for (std::size_t v = 0; v < vox; ++v) acc += p[o * vox + v];
            dbias[o] += static_cast<float>(acc);
        }
    }
}

void check_bias(const Graph& g, Var bias, int channels, const char* op) {
    if (!bias.valid()) return;
    const Shape& s = g.value(bias).shape();
    if (s.size() != static_cast<std::size_t>(channels)) {
        throw InternalError(std::string(op) + ": bias " + s.str() + " for " +
                            std::to_string(channels) + " channels");
    }
}

} // namespace

Var conv3d(Graph& g, Var x, Var weight, Var bias, const ConvGeometry& geom) {
    const Shape xs = g.value(x).shape();
    const Shape ws = g.value(weight).shape();
    if (ws.c != xs.c) {
        throw InternalError("conv3d: weight expects " + std::to_string(ws.c) +
                            " input channels, got " + std::to_string(xs.c));
    }
    check_bias(g, bias, ws.n, "conv3d");

    ColGeometry cg;
    cg.c = xs.c;
    cg.in = {xs.d, xs.h, xs.w};
    cg.k = {ws.d, ws.h, ws.w};
    cg.stride = geom.stride;
    cg.pad = geom.pad;
    for (int a = 0; a < 3; ++a) cg.out[a] = conv_out(cg.in[a], cg.k[a], cg.stride[a], cg.pad[a]);
    if (cg.out[0] < 1 || cg.out[1] < 1 || cg.out[2] < 1) {
        throw InternalError("conv3d: input " + xs.str() + " too small for kernel");
    }

    const Shape os{xs.n, ws.n, cg.out[0], cg.out[1], cg.out[2]};
    Tensor out(os);
    {
        const Tensor& xv = g.value(x);
        CMapR wm(g.value(weight).ptr(), ws.n, cg.rows());
        MatR col(cg.rows(), cg.cols());
        for (int n = 0; n < xs.n; ++n) {
            im2col(cg, xv.sample(n).data(), col.data());
            MapR(out.sample(n).data(), os.c, cg.cols()).noalias() = wm * col;
        }
        if (bias.valid()) add_bias(out, g.value(bias));
    }

    return g.record(
        std::move(out), bias.valid() ? std::vector<Var>{x, weight, bias} : std::vector<Var>{x, weight},
        [x, weight, bias, cg, xs, os](Graph& gr, Var self) {
            const Tensor& dout = gr.grad(self);
            const Tensor& xv = gr.value(x);
            CMapR wm(gr.value(weight).ptr(), os.c, cg.rows());
            const bool need_w = gr.requires_grad(weight);
            const bool need_x = gr.requires_grad(x);
            MatR col(cg.rows(), cg.cols());
            for (int n = 0; n < xs.n; ++n) {
                CMapR dn(dout.sample(n).data(), os.c, cg.cols());
                if (need_w) {
                    im2col(cg, xv.sample(n).data(), col.data());
                    MapR(gr.grad(weight).ptr(), os.c, cg.rows()).noalias() += dn * col.transpose();
                }
                if (need_x) {
                    col.noalias() = wm.transpose() * dn;
                    col2im(cg, col.data(), gr.grad(x).sample(n).data());
                }
            }
            if (bias.valid() && gr.requires_grad(bias)) accumulate_bias_grad(dout, gr.grad(bias));
        },
        "conv3d");
}

Var conv_transpose3d(Graph& g, Var x, Var weight, Var bias, const ConvGeometry& geom,
                     std::array<int, 3> output_padding) {
    const Shape xs = g.value(x).shape();
    const Shape ws = g.value(weight).shape();
    if (ws.n != xs.c) {
        throw InternalError("conv_transpose3d: weight expects " + std::to_string(ws.n) +
                            " input channels, got " + std::to_string(xs.c));
    }
    check_bias(g, bias, ws.c, "conv_transpose3d");

    // The output plays the role of the image a forward convolution would unfold.
    ColGeometry cg;
    cg.c = ws.c;
    cg.k = {ws.d, ws.h, ws.w};
    cg.stride = geom.stride;
    cg.pad = geom.pad;
    const std::array<int, 3> in{xs.d, xs.h, xs.w};
    for (int a = 0; a < 3; ++a) {
        if (output_padding[a] < 0 || (output_padding[a] > 0 && output_padding[a] >= geom.stride[a])) {
            throw InternalError("conv_transpose3d: output_padding must be < stride");
        }
        cg.in[a] = (in[a] - 1) * cg.stride[a] - 2 * cg.pad[a] + cg.k[a] + output_padding[a];
        cg.out[a] = in[a];
        if (conv_out(cg.in[a], cg.k[a], cg.stride[a], cg.pad[a]) != in[a]) {
            throw InternalError("conv_transpose3d: inconsistent geometry on axis " +
                                std::to_string(a));
        }
    }

    const Shape os{xs.n, ws.c, cg.in[0], cg.in[1], cg.in[2]};
    Tensor out(os);
    {
        const Tensor& xv = g.value(x);
        CMapR wm(g.value(weight).ptr(), ws.n, cg.rows());
        MatR col(cg.rows(), cg.cols());
        for (int n = 0; n < xs.n; ++n) {
            CMapR xn(xv.sample(n).data(), xs.c, cg.cols());
            col.noalias() = wm.transpose() * xn;
            col2im(cg, col.data(), out.sample(n).data());
        }
        if (bias.valid()) add_bias(out, g.value(bias));
    }

    return g.record(
        std::move(out), bias.valid() ? std::vector<Var>{x, weight, bias} : std::vector<Var>{x, weight},
        [x, weight, bias, cg, xs](Graph& gr, Var self) {
            const Tensor& dout = gr.grad(self);
            const Tensor& xv = gr.value(x);
            CMapR wm(gr.value(weight).ptr(), xs.c, cg.rows());
            const bool need_w = gr.requires_grad(weight);
            const bool need_x = gr.requires_grad(x);
            MatR col(cg.rows(), cg.cols());
            for (int n = 0; n < xs.n; ++n) {
                im2col(cg, dout.sample(n).data(), col.data());
                if (need_w) {
                    CMapR xn(xv.sample(n).data(), xs.c, cg.cols());
                    MapR(gr.grad(weight).ptr(), xs.c, cg.rows()).noalias() += xn * col.transpose();
                }
                if (need_x) {
                    MapR(gr.grad(x).sample(n).data(), xs.c, cg.cols()).noalias() += wm * col;
                }
            }
            if (bias.valid() && gr.requires_grad(bias)) accumulate_bias_grad(dout, gr.grad(bias));
        },
        "conv_transpose3d");
}

Var leaky_relu(Graph& g, Var x, float slope) {
    const Tensor& xv = g.value(x);
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        out[i] = xv[i] > 0.0f ? xv[i] : slope * xv[i];
    }
    return g.record(
        std::move(out), {x},
        [x, slope](Graph& gr, Var self) {
            const Tensor& dout = gr.grad(self);
            const Tensor& xv = gr.value(x);
            Tensor& dx = gr.grad(x);
            for (std::size_t i = 0; i < xv.size(); ++i) {
                dx[i] += xv[i] > 0.0f ? dout[i] : slope * dout[i];
            }
        },
        "leaky_relu");
}

Var sigmoid(Graph& g, Var x) {
    const Tensor& xv = g.value(x);
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        out[i] = 1.0f / (1.0f + std::exp(-xv[i]));
    }
    return g.record(
        std::move(out), {x},
        [x](Graph& gr, Var self) {
            const Tensor& dout = gr.grad(self);
            const Tensor& y = gr.value(self);
            Tensor& dx = gr.grad(x);
            for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dout[i] * y[i] * (1.0f - y[i]);
        },
        "sigmoid");
}

Var add(Graph& g, Var a, Var b) {
    require_same_shape(g.value(a), g.value(b), "add");
    Tensor out = g.value(a);
    out.accumulate(g.value(b));
    return g.record(
        std::move(out), {a, b},
        [a, b](Graph& gr, Var self) {
            const Tensor& dout = gr.grad(self);
            if (gr.requires_grad(a)) gr.grad(a).accumulate(dout);
            if (gr.requires_grad(b)) gr.grad(b).accumulate(dout);
        },
        "add");
}

Var multiply(Graph& g, Var a, Var b) {
    require_same_shape(g.value(a), g.value(b), "multiply");
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    Tensor out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
    return g.record(
        std::move(out), {a, b},
        [a, b](Graph& gr, Var self) {
            const Tensor& dout = gr.grad(self);
            const Tensor& av = gr.value(a);
            const Tensor& bv = gr.value(b);
            if (gr.requires_grad(a)) {
                Tensor& da = gr.grad(a);
                for (std::size_t i = 0; i < av.size(); ++i) da[i] += dout[i] * bv[i];
            }
            if (gr.requires_grad(b)) {
                Tensor& db = gr.grad(b);
                for (std::size_t i = 0; i < av.size(); ++i) db[i] += dout[i] * av[i];
            }
        },
        "multiply");
}

Var concat_channels(Graph& g, Var a, Var b) {
    const Shape as = g.value(a).shape();
    const Shape bs = g.value(b).shape();
    if (as.n != bs.n || as.d != bs.d || as.h != bs.h || as.w != bs.w) {
        throw InternalError("concat_channels: " + as.str() + " vs " + bs.str());
    }
    const Shape os{as.n, as.c + bs.c, as.d, as.h, as.w};
    Tensor out(os);
    for (int n = 0; n < os.n; ++n) {
        auto dst = out.sample(n);
        auto sa = g.value(a).sample(n);
        auto sb = g.value(b).sample(n);
        std::copy(sa.begin(), sa.end(), dst.begin());
        std::copy(sb.begin(), sb.end(), dst.begin() + static_cast<std::ptrdiff_t>(sa.size()));
    }
    return g.record(
        std::move(out), {a, b},
        [a, b, as, bs](Graph& gr, Var self) {
            const Tensor& dout = gr.grad(self);
            for (int n = 0; n < as.n; ++n) {
                auto src = dout.sample(n);
                if (gr.requires_grad(a)) {
                    auto da = gr.grad(a).sample(n);
                    for (std::size_t i = 0; i < da.size(); ++i) da[i] += src[i];
                }
                if (gr.requires_grad(b)) {
                    auto db = gr.grad(b).sample(n);
                    const std::size_t off = as.sample_size();
                    for (std::size_t i = 0; i < db.size(); ++i) db[i] += src[off + i];
                }
            }
        },
        "concat_channels");
}

namespace {

struct LerpTable {
    std::vector<int> lo;
    std::vector<int> hi;
    std::vector<float> frac;
};

LerpTable lerp_table(int in, int out) {
    LerpTable t;
    t.lo.resize(out);
    t.hi.resize(out);
    t.frac.resize(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (int o = 0; o < out; ++o) {
        double src = (o + 0.5) * scale - 0.5;
        src = std::max(src, 0.0);
        int lo = std::min(static_cast<int>(src), in - 1);
        t.lo[o] = lo;
        t.hi[o] = std::min(lo + 1, in - 1);
        t.frac[o] = static_cast<float>(src - lo);
    }
    return t;
}

} // namespace

Var resize_bilinear(Graph& g, Var x, int height, int width) {
    const Shape xs = g.value(x).shape();
    if (xs.h == height && xs.w == width) return x;
    const Shape os{xs.n, xs.c, xs.d, height, width};
    const LerpTable th = lerp_table(xs.h, height);
    const LerpTable tw = lerp_table(xs.w, width);
    const std::size_t planes = static_cast<std::size_t>(xs.n) * xs.c * xs.d;
    const std::size_t in_plane = static_cast<std::size_t>(xs.h) * xs.w;
    const std::size_t out_plane = static_cast<std::size_t>(height) * width;

    Tensor out(os);
    const float* src = g.value(x).ptr();
    for (std::size_t p = 0; p < planes; ++p) {
        const float* ip = src + p * in_plane;
        float* op = out.ptr() + p * out_plane;
        for (int oh = 0; oh < height; ++oh) {
            const float fh = th.frac[oh];
            const float* r0 = ip + static_cast<std::size_t>(th.lo[oh]) * xs.w;
            const float* r1 = ip + static_cast<std::size_t>(th.hi[oh]) * xs.w;
            for (int ow = 0; ow < width; ++ow) {
                const float fw = tw.frac[ow];
                const float top = r0[tw.lo[ow]] * (1 - fw) + r0[tw.hi[ow]] * fw;
                const float bot = r1[tw.lo[ow]] * (1 - fw) + r1[tw.hi[ow]] * fw;
                op[oh * width + ow] = top * (1 - fh) + bot * fh;
            }
        }
    }
    return g.record(
        std::move(out), {x},
        [x, th, tw, planes, in_plane, out_plane, xs, height, width](Graph& gr, Var self) {
            const Tensor& dout = gr.grad(self);
            Tensor& dx = gr.grad(x);
            for (std::size_t p = 0; p < planes; ++p) {
                float* ip = dx.ptr() + p * in_plane;
                const float* op = dout.ptr() + p * out_plane;
                for (int oh = 0; oh < height; ++oh) {
                    const float fh = th.frac[oh];
                    float* r0 = ip + static_cast<std::size_t>(th.lo[oh]) * xs.w;
                    float* r1 = ip + static_cast<std::size_t>(th.hi[oh]) * xs.w;
                    for (int ow = 0; ow < width; ++ow) {
                        const float fw = tw.frac[ow];
                        const float d = op[oh * width + ow];
                        r0[tw.lo[ow]] += d * (1 - fh) * (1 - fw);
                        r0[tw.hi[ow]] += d * (1 - fh) * fw;
                        r1[tw.lo[ow]] += d * fh * (1 - fw);
                        r1[tw.hi[ow]] += d * fh * fw;
                    }
                }
            }
        },
        "resize_bilinear");
}

Var softmax(Graph& g, Var x, int axis) {
    if (axis < 1 || axis > 4) throw InternalError("softmax: axis must be in 1..4");
    const Shape xs = g.value(x).shape();
    const std::array<int, 5> dims{xs.n, xs.c, xs.d, xs.h, xs.w};
    std::size_t inner = 1;
    for (int a = axis + 1; a < 5; ++a) inner *= static_cast<std::size_t>(dims[a]);
    const auto len = static_cast<std::size_t>(dims[axis]);
    const std::size_t outer = xs.size() / (len * inner);

    const Tensor& xv = g.value(x);
    Tensor out(xs);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = o * len * inner + i;
            float mx = xv[base];
            for (std::size_t k = 1; k < len; ++k) mx = std::max(mx, xv[base + k * inner]);
            double z = 0.0;
            for (std::size_t k = 0; k < len; ++k) {
                const float e = std::exp(xv[base + k * inner] - mx);
                out[base + k * inner] = e;
                z += e;
            }
            const float inv = static_cast<float>(1.0 / z);
            for (std::size_t k = 0; k < len; ++k) out[base + k * inner] *= inv;
        }
    }
    return g.record(
        std::move(out), {x},
        [x, outer, inner, len](Graph& gr, Var self) {
            const Tensor& dout = gr.grad(self);
            const Tensor& y = gr.value(self);
            Tensor& dx = gr.grad(x);
            for (std::size_t o = 0; o < outer; ++o) {
                for (std::size_t i = 0; i < inner; ++i) {
                    const std::size_t base = o * len * inner + i;
                    double dot = 0.0;
                    for (std::size_t k = 0; k < len; ++k) {
                        dot += static_cast<double>(dout[base + k * inner]) * y[base + k * inner];
                    }
                    for (std::size_t k = 0; k < len; ++k) {
                        const std::size_t j = base + k * inner;
                        dx[j] += y[j] * (dout[j] - static_cast<float>(dot));
                    }
                }
            }
        },
        "softmax");
}

Var scale_by_mask(Graph& g, Var x, Var mask) {
    const Shape xs = g.value(x).shape();
    const Shape ms = g.value(mask).shape();
    if (ms.c != 1 || ms.n != xs.n || ms.d != xs.d || ms.h != xs.h || ms.w != xs.w) {
        throw InternalError("scale_by_mask: mask " + ms.str() + " for features " + xs.str());
    }
    const std::size_t vox = xs.voxels();
    const Tensor& xv = g.value(x);
    const Tensor& mv = g.value(mask);
    Tensor out(xs);
    for (int n = 0; n < xs.n; ++n) {
        const float* m = mv.ptr() + static_cast<std::size_t>(n) * vox;
        for (int c = 0; c < xs.c; ++c) {
            const std::size_t off = (static_cast<std::size_t>(n) * xs.c + c) * vox;
            for (std::size_t v = 0; v < vox; ++v) out[off + v] = xv[off + v] * m[v];
        }
    }
    return g.record(
        std::move(out), {x, mask},
        [x, mask, xs, vox](Graph& gr, Var self) {
            const Tensor& dout = gr.grad(self);
            const Tensor& xv = gr.value(x);
            const Tensor& mv = gr.value(mask);
            const bool need_x = gr.requires_grad(x);
            const bool need_m = gr.requires_grad(mask);
            for (int n = 0; n < xs.n; ++n) {
                const std::size_t moff = static_cast<std::size_t>(n) * vox;
                for (int c = 0; c < xs.c; ++c) {
                    const std::size_t off = (static_cast<std::size_t>(n) * xs.c + c) * vox;
                    if (need_x) {
                        Tensor& dx = gr.grad(x);
                        for (std::size_t v = 0; v < vox; ++v) dx[off + v] += dout[off + v] * mv[moff + v];
                    }
                    if (need_m) {
                        Tensor& dm = gr.grad(mask);
                        for (std::size_t v = 0; v < vox; ++v) dm[moff + v] += dout[off + v] * xv[off + v];
                    }
                }
            }
        },
        "scale_by_mask");
}

} // namespace tempshift::nn
