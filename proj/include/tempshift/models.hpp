#pragma once

#include "tempshift/nn/graph.hpp"
#include "tempshift/nn/ops.hpp"
#include "tempshift/nn/tensor.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tempshift {

enum class Family { Cae3d, AttentionUnet, Multimodal };
enum class Fusion { Add, Multiply, Concat };

std::string to_string(Family f);
std::string to_string(Fusion f);
Family parse_family(const std::string& name);
Fusion parse_fusion(const std::string& name);

struct ModelSpec {
    Family family = Family::Cae3d;
    int input_frames = 6;
    int height = 64;
    int width = 64;
    std::vector<int> channel_widths{16, 32, 64};
    Fusion fusion = Fusion::Add;
    std::uint64_t seed = 0;

    int blocks() const noexcept { return static_cast<int>(channel_widths.size()); }
    int modalities() const noexcept { return family == Family::Multimodal ? 2 : 1; }

    /// Throws ConfigError listing every violated field.
    void validate() const;

    /// `key=value` lines, one per field.
    std::string to_kv() const;
    static ModelSpec from_kv(const std::string& text);

    /// Fusion only counts for the multimodal family.
    bool operator==(const ModelSpec& o) const;
};

/// Handles of one forward pass: outputs (one per modality) and named
/// intermediate nodes, e.g. "enc1", "bridge", "gate2.mask", "latent".
struct ForwardResult {
    std::vector<nn::Var> outputs;
    std::map<std::string, nn::Var> taps;
};

/// Bottleneck fusion of two latent volumes of identical shape.
nn::Var fuse(nn::Graph& g, nn::Var a, nn::Var b, Fusion mode);
nn::Tensor fuse(const nn::Tensor& a, const nn::Tensor& b, Fusion mode);

struct AttentionGateParams {
    nn::Var wx;   // (Ci, Cx, 1, 1, 1), no bias
    nn::Var wg;   // (Ci, Cg, 1, 1, 1)
    nn::Var bias; // (1, Ci, 1, 1, 1)
    nn::Var psi;  // (1, Ci, 1, 1, 1)
};

struct AttentionGateOutput {
    nn::Var gated;
    nn::Var mask;
    nn::Var logits;
};

/// Softmax over depth, then height, then width of single-channel logits.
nn::Var sequential_softmax(nn::Graph& g, nn::Var logits);

/// Additive attention: the gating signal is resized to the skip grid, combined
/// with the skip features, projected to one logit per voxel and normalised by
/// sequential_softmax. The mask multiplies every channel of `x`.
AttentionGateOutput attention_gate(nn::Graph& g, nn::Var x, nn::Var gating,
                                   const AttentionGateParams& params);

/// Maps a W-frame volume (or a pair of them) to W output frames in [0, 1].
class Model {
public:
    explicit Model(ModelSpec spec);
    virtual ~Model() = default;

    const ModelSpec& spec() const noexcept { return spec_; }
    int num_modalities() const noexcept { return spec_.modalities(); }

    std::vector<nn::Parameter>& parameters() noexcept { return params_; }
    const std::vector<nn::Parameter>& parameters() const noexcept { return params_; }
    nn::Parameter* find_parameter(const std::string& name);
    /// Bias feeding the final sigmoid, one per modality.
    std::vector<std::string> output_bias_names() const;
    std::size_t parameter_count() const;
    void zero_grad();

    /// Trainable pass: parameters become graph leaves that collect gradients.
    ForwardResult forward(nn::Graph& g, std::span<const nn::Var> inputs);
    /// Inference pass; safe to run concurrently on a shared model.
    ForwardResult forward(nn::Graph& g, std::span<const nn::Var> inputs) const;

    /// Inputs of shape (N, 1, W, H, W_px), one per modality.
    std::vector<nn::Tensor> predict(std::span<const nn::Tensor> inputs) const;

    virtual std::unique_ptr<Model> clone() const = 0;
    virtual std::size_t attention_gate_count() const { return 0; }
    /// Encoder levels (1 = finest) whose features reach the decoder directly.
    virtual std::vector<int> skip_levels() const { return {}; }

    nn::Shape latent_shape(int batch = 1) const;
    nn::Shape input_shape(int batch = 1) const;

protected:
    using Binder = std::function<nn::Var(std::size_t)>;

    struct ConvLayer {
        std::size_t weight = 0;
        std::size_t bias = 0;
        bool has_bias = true;
        bool transpose = false;
        nn::ConvGeometry geom;
        std::array<int, 3> output_padding{0, 0, 0};
    };

    struct Encoder {
        std::vector<ConvLayer> blocks;
        ConvLayer bridge;
    };

    struct Decoder {
        std::vector<ConvLayer> blocks; // coarsest first; the last one emits 1 channel
    };

    struct GateLayer {
        std::size_t wx = 0;
        std::size_t wg = 0;
        std::size_t bias = 0;
        std::size_t psi = 0;
    };

    virtual ForwardResult forward_impl(nn::Graph& g, std::span<const nn::Var> inputs,
                                       const Binder& bind) const = 0;

    ConvLayer make_conv(const std::string& name, int in_ch, int out_ch, int k,
                        std::array<int, 3> stride, bool transpose, bool bias = true);
    Encoder make_encoder(const std::string& prefix);
    /// `first_in_extra[j]` adds input channels to decoder block j (0 = coarsest).
    Decoder make_decoder(const std::string& prefix, std::vector<int> first_in_extra);
    GateLayer make_gate(const std::string& prefix, int x_ch, int g_ch);

    nn::Var apply(nn::Graph& g, const ConvLayer& layer, nn::Var x, const Binder& bind) const;
    /// Encoder activations, finest first; the last entry is the bridge output.
    std::vector<nn::Var> run_encoder(nn::Graph& g, const Encoder& enc, nn::Var x,
                                     const Binder& bind, ForwardResult& res,
                                     const std::string& prefix) const;
    /// Block j of `dec`: transposed conv, then leaky rectifier or, for the
    /// finest block, the output sigmoid.
    nn::Var decoder_block(nn::Graph& g, const Decoder& dec, std::size_t j, nn::Var x,
                          const Binder& bind) const;
    nn::Var decode(nn::Graph& g, const Decoder& dec, nn::Var x, const Binder& bind,
                   ForwardResult& res, const std::string& prefix) const;
    AttentionGateParams bind_gate(const GateLayer& gate, const Binder& bind) const;

    ModelSpec spec_;
    std::vector<nn::Parameter> params_;

private:
    std::size_t add_parameter(const std::string& name, nn::Shape shape, int fan_in, bool zero);
};

std::unique_ptr<Model> build_3dcae(const ModelSpec& spec);
std::unique_ptr<Model> build_attention_unet(const ModelSpec& spec);
std::unique_ptr<Model> build_multimodal(const ModelSpec& spec);
/// Dispatches on spec.family.
std::unique_ptr<Model> build_model(const ModelSpec& spec);

} // namespace tempshift
