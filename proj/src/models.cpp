#include "tempshift/models.hpp"

#include "tempshift/errors.hpp"
#include "tempshift/random.hpp"

#include <cmath>
#include <sstream>

namespace tempshift {

using nn::Graph;
using nn::Shape;
using nn::Tensor;
using nn::Var;

namespace {

constexpr float kLeakySlope = 0.1f;

std::string join_errors(const std::vector<std::string>& errors) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
    return msg;
}

} // namespace

std::string to_string(Family f) {
    switch (f) {
    case Family::Cae3d: return "3dcae";
    case Family::AttentionUnet: return "attention-unet";
    case Family::Multimodal: return "multimodal";
    }
    return "?";
}

std::string to_string(Fusion f) {
    switch (f) {
    case Fusion::Add: return "add";
    case Fusion::Multiply: return "multiply";
    case Fusion::Concat: return "concat";
    }
    return "?";
}

Family parse_family(const std::string& name) {
    if (name == "3dcae") return Family::Cae3d;
    if (name == "attention-unet") return Family::AttentionUnet;
    if (name == "multimodal") return Family::Multimodal;
    throw ConfigError("unknown family '" + name +
                      "' (expected 3dcae, attention-unet, multimodal)");
}

Fusion parse_fusion(const std::string& name) {
    if (name == "add") return Fusion::Add;
    if (name == "multiply") return Fusion::Multiply;
    if (name == "concat") return Fusion::Concat;
    throw ConfigError("unknown fusion '" + name +
                      "' (expected add, multiply, concat)");
}

void ModelSpec::validate() const {
    std::vector<std::string> errors;
    if (input_frames < 1) errors.push_back("model.input_frames must be >= 1");
    if (channel_widths.empty()) errors.push_back("model.channel_widths must not be empty");
    for (int c : channel_widths) {
        if (c < 1) {
            errors.push_back("model.channel_widths entries must be >= 1");
            break;
        }
    }
    const int factor = 1 << std::min(blocks(), 30);
    if (height < 1 || height % factor != 0) {
        errors.push_back("model.frame_size height " + std::to_string(height) +
                         " must be a positive multiple of " + std::to_string(factor));
    }
    if (width < 1 || width % factor != 0) {
        errors.push_back("model.frame_size width " + std::to_string(width) +
                         " must be a positive multiple of " + std::to_string(factor));
    }
    if (!errors.empty()) throw ConfigError(join_errors(errors));
}

bool ModelSpec::operator==(const ModelSpec& o) const {
    return family == o.family && input_frames == o.input_frames && height == o.height &&
           width == o.width && channel_widths == o.channel_widths && seed == o.seed &&
           (family != Family::Multimodal || fusion == o.fusion);
}

std::string ModelSpec::to_kv() const {
    std::ostringstream os;
    os << "family=" << to_string(family) << "\n";
    os << "input_frames=" << input_frames << "\n";
    os << "height=" << height << "\n";
    os << "width=" << width << "\n";
    os << "channel_widths=";
    for (std::size_t i = 0; i < channel_widths.size(); ++i) {
        os << (i ? "," : "") << channel_widths[i];
    }
    os << "\n";
    os << "fusion=" << to_string(fusion) << "\n";
    os << "seed=" << seed << "\n";
    return os.str();
}

ModelSpec ModelSpec::from_kv(const std::string& text) {
    ModelSpec spec;
    spec.channel_widths.clear();
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("model spec: malformed line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        try {
            if (key == "family") spec.family = parse_family(val);
            else if (key == "input_frames") spec.input_frames = std::stoi(val);
            else if (key == "height") spec.height = std::stoi(val);
            else if (key == "width") spec.width = std::stoi(val);
            else if (key == "fusion") spec.fusion = parse_fusion(val);
            else if (key == "seed") spec.seed = std::stoull(val);
            else if (key == "channel_widths") {
                std::istringstream cs(val);
                std::string tok;
                while (std::getline(cs, tok, ',')) spec.channel_widths.push_back(std::stoi(tok));
            } else {
                throw DataError("model spec: unknown key '" + key + "'");
            }
        } catch (const ConfigError& e) {
            throw DataError(std::string("model spec: ") + e.what());
        } catch (const std::invalid_argument&) {
            throw DataError("model spec: bad value for '" + key + "': " + val);
        } catch (const std::out_of_range&) {
            throw DataError("model spec: value out of range for '" + key + "': " + val);
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------

Var fuse(Graph& g, Var a, Var b, Fusion mode) {
    const Shape as = g.value(a).shape();
    const Shape bs = g.value(b).shape();
    if (as != bs) {
        throw DataError("fuse: latent shapes differ, " + as.str() + " vs " + bs.str());
    }
    switch (mode) {
    case Fusion::Add: return nn::add(g, a, b);
    case Fusion::Multiply: return nn::multiply(g, a, b);
    case Fusion::Concat: return nn::concat_channels(g, a, b);
    }
    throw InternalError("fuse: unknown mode");
}

Tensor fuse(const Tensor& a, const Tensor& b, Fusion mode) {
    Graph g;
    const Var va = g.constant_ref(a);
    const Var vb = g.constant_ref(b);
    return g.value(fuse(g, va, vb, mode));
}

Var sequential_softmax(Graph& g, Var logits) {
    Var m = nn::softmax(g, logits, 2);
    m = nn::softmax(g, m, 3);
    return nn::softmax(g, m, 4);
}

AttentionGateOutput attention_gate(Graph& g, Var x, Var gating, const AttentionGateParams& p) {
    const Shape xs = g.value(x).shape();
    const Shape gs = g.value(gating).shape();
    if (gs.n != xs.n || gs.d != xs.d) {
        throw InternalError("attention_gate: gating " + gs.str() + " cannot align with " +
                            xs.str());
    }
    const nn::ConvGeometry pointwise{{1, 1, 1}, {0, 0, 0}};
    const Var g_up = nn::resize_bilinear(g, gating, xs.h, xs.w);
    const Var theta = nn::conv3d(g, x, p.wx, Var{}, pointwise);
    const Var phi = nn::conv3d(g, g_up, p.wg, p.bias, pointwise);
    if (g.value(theta).shape() != g.value(phi).shape()) {
        throw InternalError("attention_gate: misaligned projections " +
                            g.value(theta).shape().str() + " vs " + g.value(phi).shape().str());
    }
    const Var inter = nn::leaky_relu(g, nn::add(g, theta, phi), kLeakySlope);
    const Var logits = nn::conv3d(g, inter, p.psi, Var{}, pointwise);
    const Var mask = sequential_softmax(g, logits);
    return {nn::scale_by_mask(g, x, mask), mask, logits};
}

// ---------------------------------------------------------------------------

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
}

nn::Parameter* Model::find_parameter(const std::string& name) {
    for (auto& p : params_) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void Model::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

ForwardResult Model::forward(Graph& g, std::span<const Var> inputs) {
    return forward_impl(g, inputs, [&](std::size_t i) { return g.parameter(params_[i]); });
}

ForwardResult Model::forward(Graph& g, std::span<const Var> inputs) const {
    return forward_impl(g, inputs, [&](std::size_t i) { return g.constant_ref(params_[i].value); });
}

std::vector<Tensor> Model::predict(std::span<const Tensor> inputs) const {
    if (static_cast<int>(inputs.size()) != num_modalities()) {
        throw DataError("predict: model takes " + std::to_string(num_modalities()) +
                        " input volume(s), got " + std::to_string(inputs.size()));
    }
    Graph g;
    std::vector<Var> vars;
    for (const auto& t : inputs) {
        const Shape s = t.shape();
        if (s.c != 1 || s.d != spec_.input_frames || s.h != spec_.height || s.w != spec_.width) {
            throw DataError("predict: input " + s.str() + " does not match model input " +
                            input_shape(s.n).str());
        }
        vars.push_back(g.constant_ref(t));
    }
    const ForwardResult res = forward(g, vars);
    std::vector<Tensor> out;
    for (Var v : res.outputs) out.push_back(g.value(v));
    return out;
}

Shape Model::latent_shape(int batch) const {
    const int f = 1 << spec_.blocks();
    return {batch, spec_.channel_widths.back(), spec_.input_frames, spec_.height / f,
            spec_.width / f};
}

Shape Model::input_shape(int batch) const {
    return {batch, 1, spec_.input_frames, spec_.height, spec_.width};
}

std::vector<std::string> Model::output_bias_names() const {
    if (num_modalities() == 1) return {"dec1.bias"};
    return {"a.dec1.bias", "b.dec1.bias"};
}

std::size_t Model::add_parameter(const std::string& name, Shape shape, int fan_in, bool zero) {
    nn::Parameter p(name, shape);
    if (!zero) {
        // U(-1/sqrt(fan_in), 1/sqrt(fan_in)), one stream per parameter name.
        Rng rng(derive_seed(spec_.seed, name));
        const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan_in)));
        for (auto& v : p.value.data()) v = static_cast<float>(rng.uniform(-bound, bound));
    }
    params_.push_back(std::move(p));
    return params_.size() - 1;
}

Model::ConvLayer Model::make_conv(const std::string& name, int in_ch, int out_ch, int k,
                                  std::array<int, 3> stride, bool transpose, bool bias) {
    ConvLayer l;
    l.transpose = transpose;
    l.has_bias = bias;
    const int pad = k / 2;
    l.geom = nn::ConvGeometry{stride, {pad, pad, pad}};
    // A transposed conv's fan-in is counted over its output channels.
    const int fan_in = (transpose ? out_ch : in_ch) * k * k * k;
    if (transpose) {
        for (int a = 0; a < 3; ++a) l.output_padding[a] = stride[a] - 1;
        l.weight = add_parameter(name + ".weight", Shape{in_ch, out_ch, k, k, k}, fan_in, false);
    } else {
        l.weight = add_parameter(name + ".weight", Shape{out_ch, in_ch, k, k, k}, fan_in, false);
    }
    if (bias) l.bias = add_parameter(name + ".bias", Shape{1, out_ch, 1, 1, 1}, fan_in, false);
    return l;
}

Model::Encoder Model::make_encoder(const std::string& prefix) {
    Encoder enc;
    const auto& c = spec_.channel_widths;
    for (int i = 0; i < spec_.blocks(); ++i) {
        const int in_ch = i == 0 ? 1 : c[i - 1];
        enc.blocks.push_back(make_conv(prefix + "enc" + std::to_string(i + 1), in_ch, c[i], 3,
                                       {1, 2, 2}, false));
    }
    enc.bridge = make_conv(prefix + "bridge", c.back(), c.back(), 3, {1, 1, 1}, false);
    return enc;
}

Model::Decoder Model::make_decoder(const std::string& prefix, std::vector<int> extra) {
    Decoder dec;
    const auto& c = spec_.channel_widths;
    const int n = spec_.blocks();
    extra.resize(static_cast<std::size_t>(n), 0);
    int in_ch = c.back();
    for (int j = 0; j < n; ++j) {
        const int level = n - j;
        const int out_ch = level >= 2 ? c[level - 2] : 1;
        dec.blocks.push_back(make_conv(prefix + "dec" + std::to_string(level),
                                       in_ch + extra[j], out_ch, 3, {1, 2, 2}, true));
        in_ch = out_ch;
    }
    return dec;
}

Model::GateLayer Model::make_gate(const std::string& prefix, int x_ch, int g_ch) {
    const int inter = std::max(1, x_ch / 2);
    GateLayer gate;
    gate.wx = add_parameter(prefix + ".wx", Shape{inter, x_ch, 1, 1, 1}, x_ch, false);
    gate.wg = add_parameter(prefix + ".wg", Shape{inter, g_ch, 1, 1, 1}, g_ch, false);
    gate.bias = add_parameter(prefix + ".bias", Shape{1, inter, 1, 1, 1}, g_ch, false);
    // No bias on psi: the softmax that follows is invariant to a constant shift.
    gate.psi = add_parameter(prefix + ".psi", Shape{1, inter, 1, 1, 1}, inter, false);
    return gate;
}

Var Model::apply(Graph& g, const ConvLayer& layer, Var x, const Binder& bind) const {
    const Var w = bind(layer.weight);
    const Var b = layer.has_bias ? bind(layer.bias) : Var{};
    if (layer.transpose) return nn::conv_transpose3d(g, x, w, b, layer.geom, layer.output_padding);
    return nn::conv3d(g, x, w, b, layer.geom);
}

std::vector<Var> Model::run_encoder(Graph& g, const Encoder& enc, Var x, const Binder& bind,
                                    ForwardResult& res, const std::string& prefix) const {
    std::vector<Var> feats;
    Var cur = x;
    for (std::size_t i = 0; i < enc.blocks.size(); ++i) {
        cur = nn::leaky_relu(g, apply(g, enc.blocks[i], cur, bind), kLeakySlope);
        res.taps[prefix + "enc" + std::to_string(i + 1)] = cur;
        feats.push_back(cur);
    }
    cur = nn::leaky_relu(g, apply(g, enc.bridge, cur, bind), kLeakySlope);
    res.taps[prefix + "bridge"] = cur;
    feats.push_back(cur);
    return feats;
}

Var Model::decoder_block(Graph& g, const Decoder& dec, std::size_t j, Var x,
                         const Binder& bind) const {
    const Var y = apply(g, dec.blocks[j], x, bind);
    // The finest block emits the frames themselves.
    return j + 1 == dec.blocks.size() ? nn::sigmoid(g, y) : nn::leaky_relu(g, y, kLeakySlope);
}

Var Model::decode(Graph& g, const Decoder& dec, Var x, const Binder& bind, ForwardResult& res,
                  const std::string& prefix) const {
    for (std::size_t j = 0; j < dec.blocks.size(); ++j) {
        x = decoder_block(g, dec, j, x, bind);
        res.taps[prefix + "dec" + std::to_string(dec.blocks.size() - j)] = x;
    }
    return x;
}

AttentionGateParams Model::bind_gate(const GateLayer& gate, const Binder& bind) const {
    return {bind(gate.wx), bind(gate.wg), bind(gate.bias), bind(gate.psi)};
}

// ---------------------------------------------------------------------------

namespace {

void require_inputs(std::span<const Var> inputs, std::size_t n, const char* family) {
    if (inputs.size() != n) {
        throw DataError(std::string(family) + ": expected " + std::to_string(n) +
                        " input volume(s), got " + std::to_string(inputs.size()));
    }
}

class Cae3d final : public Model {
public:
    explicit Cae3d(ModelSpec spec) : Model(std::move(spec)) {
        encoder_ = make_encoder("");
        decoder_ = make_decoder("", {});
    }

    std::unique_ptr<Model> clone() const override { return std::make_unique<Cae3d>(*this); }

protected:
    ForwardResult forward_impl(Graph& g, std::span<const Var> inputs,
                               const Binder& bind) const override {
        require_inputs(inputs, 1, "3dcae");
        ForwardResult res;
        const auto feats = run_encoder(g, encoder_, inputs[0], bind, res, "");
        Var cur = feats.back();
        res.taps["latent"] = cur;
        res.outputs.push_back(decode(g, decoder_, cur, bind, res, ""));
        return res;
    }

private:
    Encoder encoder_;
    Decoder decoder_;
};

class AttentionUnet final : public Model {
public:
    explicit AttentionUnet(ModelSpec spec) : Model(std::move(spec)) {
        const auto& c = spec_.channel_widths;
        const int n = spec_.blocks();
        encoder_ = make_encoder("");
        // Decoder block j (coarsest first) serves level n - j; levels >= 2 get a gated skip.
        std::vector<int> extra(static_cast<std::size_t>(n), 0);
        for (int j = 0; j < n; ++j) {
            const int level = n - j;
            if (level >= 2) extra[static_cast<std::size_t>(j)] = c[level - 1];
        }
        decoder_ = make_decoder("", extra);
        for (int level = 2; level <= n; ++level) {
            gates_.push_back(make_gate("gate" + std::to_string(level), c[level - 1], c.back()));
        }
    }

    std::unique_ptr<Model> clone() const override {
        return std::make_unique<AttentionUnet>(*this);
    }
    std::size_t attention_gate_count() const override { return gates_.size(); }
    std::vector<int> skip_levels() const override {
        std::vector<int> levels;
        for (int level = 2; level <= spec_.blocks(); ++level) levels.push_back(level);
        return levels;
    }

protected:
    ForwardResult forward_impl(Graph& g, std::span<const Var> inputs,
                               const Binder& bind) const override {
        require_inputs(inputs, 1, "attention-unet");
        ForwardResult res;
        const auto feats = run_encoder(g, encoder_, inputs[0], bind, res, "");
        const Var gating = feats.back();
        res.taps["latent"] = gating;
        const int n = spec_.blocks();
        Var cur = gating;
        for (int j = 0; j < n; ++j) {
            const int level = n - j;
            if (level >= 2) {
                const auto& gate = gates_[static_cast<std::size_t>(level - 2)];
                const auto out = attention_gate(g, feats[static_cast<std::size_t>(level - 1)],
                                                gating, bind_gate(gate, bind));
                const std::string tag = "gate" + std::to_string(level);
                res.taps[tag + ".mask"] = out.mask;
                res.taps[tag + ".gated"] = out.gated;
                cur = nn::concat_channels(g, cur, out.gated);
            }
            cur = decoder_block(g, decoder_, static_cast<std::size_t>(j), cur, bind);
            res.taps["dec" + std::to_string(level)] = cur;
        }
        res.outputs.push_back(cur);
        return res;
    }

private:
    Encoder encoder_;
    Decoder decoder_;
    std::vector<GateLayer> gates_; // gates_[i] serves level i + 2
};

class MultimodalCae final : public Model {
public:
    explicit MultimodalCae(ModelSpec spec) : Model(std::move(spec)) {
        encoder_a_ = make_encoder("a.");
        encoder_b_ = make_encoder("b.");
        std::vector<int> extra;
        if (spec_.fusion == Fusion::Concat) extra.push_back(spec_.channel_widths.back());
        decoder_a_ = make_decoder("a.", extra);
        decoder_b_ = make_decoder("b.", extra);
    }

    std::unique_ptr<Model> clone() const override {
        return std::make_unique<MultimodalCae>(*this);
    }

protected:
    ForwardResult forward_impl(Graph& g, std::span<const Var> inputs,
                               const Binder& bind) const override {
        require_inputs(inputs, 2, "multimodal");
        ForwardResult res;
        const Var la = run_encoder(g, encoder_a_, inputs[0], bind, res, "a.").back();
        const Var lb = run_encoder(g, encoder_b_, inputs[1], bind, res, "b.").back();
        res.taps["latent_a"] = la;
        res.taps["latent_b"] = lb;
        const Var fused = fuse(g, la, lb, spec_.fusion);
        res.taps["latent"] = fused;
        res.outputs.push_back(decode(g, decoder_a_, fused, bind, res, "a."));
        res.outputs.push_back(decode(g, decoder_b_, fused, bind, res, "b."));
        return res;
    }

private:

    Encoder encoder_a_;
    Encoder encoder_b_;
    Decoder decoder_a_;
    Decoder decoder_b_;
};

void require_family(const ModelSpec& spec, Family f) {
    if (spec.family != f) {
        throw ConfigError("model: spec family is " + to_string(spec.family) + ", builder needs " +
                          to_string(f));
    }
}

} // namespace

std::unique_ptr<Model> build_3dcae(const ModelSpec& spec) {
    require_family(spec, Family::Cae3d);
    return std::make_unique<Cae3d>(spec);
}

std::unique_ptr<Model> build_attention_unet(const ModelSpec& spec) {
    require_family(spec, Family::AttentionUnet);
    return std::make_unique<AttentionUnet>(spec);
}

std::unique_ptr<Model> build_multimodal(const ModelSpec& spec) {
    require_family(spec, Family::Multimodal);
    return std::make_unique<MultimodalCae>(spec);
}

std::unique_ptr<Model> build_model(const ModelSpec& spec) {
    switch (spec.family) {
    case Family::Cae3d: return build_3dcae(spec);
    case Family::AttentionUnet: return build_attention_unet(spec);
    case Family::Multimodal: return build_multimodal(spec);
    }
    throw ConfigError("model: unknown family");
}

} // namespace tempshift
