#include "doctest.h"

#include "tempshift/errors.hpp"
#include "tempshift/models.hpp"
#include "tempshift/random.hpp"
#include "tempshift/training.hpp"

#include <cmath>

using namespace tempshift;
using nn::Shape;
using nn::Tensor;

namespace {

ModelSpec spec_for(Family f, int W, int size, Fusion fusion = Fusion::Add,
                   std::vector<int> widths = {16, 32, 64}) {
    ModelSpec s;
    s.family = f;
    s.input_frames = W;
    s.height = s.width = size;
    s.channel_widths = std::move(widths);
    s.fusion = fusion;
    s.seed = 17;
    return s;
}

Tensor random_tensor(Rng& rng, Shape s) {
    Tensor t(s);
    for (auto& v : t.data()) v = static_cast<float>(rng.uniform());
    return t;
}

std::vector<Tensor> random_inputs(const Model& m, int batch, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Tensor> in;
    for (int k = 0; k < m.num_modalities(); ++k) in.push_back(random_tensor(rng, m.input_shape(batch)));
    return in;
}

// Sum of squared differences against random targets, with its gradient
// accumulated into the parameters.
double loss_and_grad(Model& m, const std::vector<Tensor>& in, const std::vector<Tensor>& target) {
    m.zero_grad();
    nn::Graph g;
    std::vector<nn::Var> vs;
    for (const auto& t : in) vs.push_back(g.constant_ref(t));
    const auto res = m.forward(g, vs);
    double loss = 0;
    for (std::size_t k = 0; k < res.outputs.size(); ++k) {
        const Tensor& o = g.value(res.outputs[k]);
        Tensor seed(o.shape());
        for (std::size_t i = 0; i < o.size(); ++i) {
            const double d = static_cast<double>(o[i]) - target[k][i];
            loss += d * d;
            seed[i] = static_cast<float>(2 * d);
        }
        g.backward(res.outputs[k], seed);
    }
    return loss;
}

double loss_only(const Model& m, const std::vector<Tensor>& in, const std::vector<Tensor>& target) {
    const auto out = m.predict(in);
    double loss = 0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        for (std::size_t i = 0; i < out[k].size(); ++i) {
            const double d = static_cast<double>(out[k][i]) - target[k][i];
            loss += d * d;
        }
    }
    return loss;
}

} // namespace

TEST_CASE("outputs keep the input shape and stay in [0, 1]") {
    for (Family f : {Family::Cae3d, Family::AttentionUnet, Family::Multimodal}) {
        for (int W : {4, 6, 8}) {
            for (int size : {32, 64}) {
                const auto m = build_model(spec_for(f, W, size));
                const auto out = m->predict(random_inputs(*m, 1, 3));
                REQUIRE(out.size() == static_cast<std::size_t>(m->num_modalities()));
                for (const auto& o : out) {
                    CHECK(o.shape() == Shape{1, 1, W, size, size});
                    for (float v : o.data()) REQUIRE((std::isfinite(v) && v >= 0.f && v <= 1.f));
                }
            }
        }
    }
}

TEST_CASE("bottleneck of the default spec") {
    const auto m = build_model(spec_for(Family::Cae3d, 6, 64));
    CHECK(m->latent_shape() == Shape{1, 64, 6, 8, 8});
    nn::Graph g;
    const Tensor x(m->input_shape(1), 0.5f);
    const std::vector<nn::Var> in{g.input(x)};
    const auto res = static_cast<const Model&>(*m).forward(g, in);
    CHECK(g.value(res.taps.at("latent")).shape() == Shape{1, 64, 6, 8, 8});
}

TEST_CASE("same seed builds identical models") {
    const auto a = build_model(spec_for(Family::AttentionUnet, 6, 32));
    const auto b = build_model(spec_for(Family::AttentionUnet, 6, 32));
    const auto in = random_inputs(*a, 2, 8);
    const auto oa = a->predict(in);
    const auto ob = b->predict(in);
    for (std::size_t i = 0; i < oa[0].size(); ++i) REQUIRE(oa[0][i] == ob[0][i]);
    auto other = spec_for(Family::AttentionUnet, 6, 32);
    other.seed = 18;
    CHECK(build_model(other)->predict(in)[0][0] != oa[0][0]);
}

TEST_CASE("attention U-Net has two gates and no finest skip") {
    const auto m = build_model(spec_for(Family::AttentionUnet, 6, 32));
    CHECK(m->attention_gate_count() == 2);
    CHECK(m->skip_levels() == std::vector<int>{2, 3});
    CHECK(build_model(spec_for(Family::Cae3d, 6, 32))->attention_gate_count() == 0);

    nn::Graph g;
    const auto in = random_inputs(*m, 1, 4);
    const std::vector<nn::Var> vs{g.input(in[0])};
    const auto res = static_cast<const Model&>(*m).forward(g, vs);
    // The finest features feed only the next encoder convolution.
    const auto consumers = g.consumers(res.taps.at("enc1"));
    REQUIRE(consumers.size() == 1);
    CHECK(g.op(consumers[0]) == "conv3d");
    CHECK(g.consumers(res.taps.at("enc2")).size() > 1);
    CHECK(res.taps.count("gate1.mask") == 0);
}

TEST_CASE("attention masks normalise along width") {
    const auto m = build_model(spec_for(Family::AttentionUnet, 6, 32));
    nn::Graph g;
    const auto in = random_inputs(*m, 2, 5);
    const std::vector<nn::Var> vs{g.input(in[0])};
    const auto res = static_cast<const Model&>(*m).forward(g, vs);
    for (const char* tap : {"gate2.mask", "gate3.mask"}) {
        const Tensor& mask = g.value(res.taps.at(tap));
        const Shape s = mask.shape();
        CHECK(s.c == 1);
        for (int n = 0; n < s.n; ++n) {
            for (int d = 0; d < s.d; ++d) {
                for (int h = 0; h < s.h; ++h) {
                    double sum = 0;
                    for (int w = 0; w < s.w; ++w) {
                        const float v = mask.at(n, 0, d, h, w);
                        REQUIRE((v > 0.f && v < 1.f));
                        sum += v;
                    }
                    REQUIRE(std::abs(sum - 1.0) <= 1e-5);
                }
            }
        }
    }
}

TEST_CASE("uniform logits give a uniform mask of one over the width") {
    nn::Graph g;
    const Tensor logits(Shape{1, 1, 3, 4, 5}, 0.7f);
    const Tensor& mask = g.value(sequential_softmax(g, g.input(logits)));
    for (float v : mask.data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-6));

    Rng rng(6);
    const Tensor x = random_tensor(rng, {1, 3, 3, 4, 5});
    const Tensor& scaled = g.value(nn::scale_by_mask(g, g.input(x), g.input(mask)));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(scaled[i] == doctest::Approx(x[i] / 5).epsilon(1e-6));
}

TEST_CASE("fusion identities") {
    Rng rng(7);
    const Tensor a = random_tensor(rng, {1, 64, 6, 8, 8});
    const Tensor zeros(a.shape(), 0.0f);
    const Tensor ones(a.shape(), 1.0f);
    const Tensor sum = fuse(a, zeros, Fusion::Add);
    const Tensor prod = fuse(a, ones, Fusion::Multiply);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(sum[i] == a[i]);
        REQUIRE(prod[i] == a[i]);
    }
    const Tensor cat = fuse(a, ones, Fusion::Concat);
    CHECK(cat.shape() == Shape{1, 128, 6, 8, 8});
    CHECK(cat.at(0, 5, 1, 2, 3) == a.at(0, 5, 1, 2, 3));
    CHECK(cat.at(0, 69, 1, 2, 3) == 1.0f);
    CHECK_THROWS(fuse(a, Tensor(Shape{1, 64, 6, 4, 4}), Fusion::Add));
}

TEST_CASE("add fusion with a silenced second encoder ignores the second input") {
    auto m = build_model(spec_for(Family::Multimodal, 6, 32, Fusion::Add));
    for (const char* name : {"b.bridge.weight", "b.bridge.bias"}) {
        nn::Parameter* p = m->find_parameter(name);
        REQUIRE(p != nullptr);
        p->value.fill(0.0f);
    }
    auto in = random_inputs(*m, 1, 9);
    const auto before = m->predict(in);
    Rng rng(10);
    in[1] = random_tensor(rng, in[1].shape());
    const auto after = m->predict(in);
    for (std::size_t i = 0; i < before[0].size(); ++i) REQUIRE(before[0][i] == after[0][i]);
}

TEST_CASE("concat fusion only widens the first decoder block") {
    const auto add = build_model(spec_for(Family::Multimodal, 6, 32, Fusion::Add));
    const auto mul = build_model(spec_for(Family::Multimodal, 6, 32, Fusion::Multiply));
    const auto cat = build_model(spec_for(Family::Multimodal, 6, 32, Fusion::Concat));
    CHECK(add->parameter_count() == mul->parameter_count());
    CHECK(cat->parameter_count() > add->parameter_count());
    REQUIRE(cat->parameters().size() == add->parameters().size());
    for (std::size_t i = 0; i < add->parameters().size(); ++i) {
        const auto& p = add->parameters()[i];
        const auto& q = cat->parameters()[i];
        CHECK(p.name == q.name);
        if (!(p.value.shape() == q.value.shape())) {
            CHECK((p.name == "a.dec3.weight" || p.name == "b.dec3.weight"));
        }
    }
}

TEST_CASE("every parameter receives a gradient") {
    const std::vector<std::pair<Family, Fusion>> variants{
        {Family::Cae3d, Fusion::Add},          {Family::AttentionUnet, Fusion::Add},
        {Family::Multimodal, Fusion::Add},     {Family::Multimodal, Fusion::Multiply},
        {Family::Multimodal, Fusion::Concat}};
    for (const auto& [family, fusion] : variants) {
        auto m = build_model(spec_for(family, 4, 16, fusion, {3, 4, 5}));
        const auto in = random_inputs(*m, 2, 11);
        const auto target = random_inputs(*m, 2, 12);
        loss_and_grad(*m, in, target);
        for (const auto& p : m->parameters()) {
            double norm = 0;
            for (float v : p.grad.data()) norm += static_cast<double>(v) * v;
            INFO(to_string(family), " ", to_string(fusion), " ", p.name);
            CHECK(norm > 0.0);
        }
    }
}

TEST_CASE("backward agrees with a finite difference along the gradient") {
    for (Family family : {Family::Cae3d, Family::AttentionUnet, Family::Multimodal}) {
        auto m = build_model(spec_for(family, 4, 16, Fusion::Concat, {3, 4, 5}));
        const auto in = random_inputs(*m, 2, 13);
        const auto target = random_inputs(*m, 2, 14);
        loss_and_grad(*m, in, target);

        std::vector<std::vector<float>> grads;
        double gnorm2 = 0;
        for (const auto& p : m->parameters()) {
            grads.emplace_back(p.grad.data().begin(), p.grad.data().end());
            for (float v : p.grad.data()) gnorm2 += static_cast<double>(v) * v;
        }
        const double eps = 1e-2 / std::sqrt(gnorm2);
        auto shifted = [&](double t) {
            auto copy = m->clone();
            for (std::size_t k = 0; k < copy->parameters().size(); ++k) {
                auto& v = copy->parameters()[k].value;
                for (std::size_t i = 0; i < v.size(); ++i) v[i] += static_cast<float>(t * grads[k][i]);
            }
            return loss_only(*copy, in, target);
        };
        const double fd = (shifted(eps) - shifted(-eps)) / (2 * eps);
        INFO(to_string(family));
        CHECK(fd == doctest::Approx(gnorm2).epsilon(1e-2));
    }
}

TEST_CASE("a small step lowers the training loss") {
    ModelSpec s = spec_for(Family::Cae3d, 6, 16, Fusion::Add, {4, 8, 8});
    auto m = build_model(s);
    VideoClip c;
    c.clip_id = "c";
    c.modality = "intensity";
    c.height = c.width = 16;
    Rng rng(15);
    for (int t = 0; t < 12; ++t) {
        c.timestamps.push_back(t / 8.0);
        for (int i = 0; i < 256; ++i) c.frames.push_back(static_cast<float>(rng.uniform()));
    }
    const std::vector<ClipGroup> groups{{&c}};
    const WindowSpec w{6, 2, 1};
    const auto windows = enumerate_windows(groups, w);
    const Batch batch = make_batch(groups, windows, w);
    nn::Adam adam(m->parameters(), {1e-4});
    const double before = train_step(*m, adam, batch, w, LossMode::Full);
    CHECK(batch_loss(*m, batch, w, LossMode::Full) < before);
}

TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(build_model(spec_for(Family::Cae3d, 6, 36)), ConfigError);
    CHECK_THROWS_AS(build_model(spec_for(Family::Cae3d, 0, 32)), ConfigError);
    CHECK_THROWS_AS(parse_family("vit"), ConfigError);
    CHECK_THROWS_AS(parse_fusion("max"), ConfigError);
    ModelSpec s = spec_for(Family::Multimodal, 6, 32, Fusion::Multiply);
    CHECK(ModelSpec::from_kv(s.to_kv()) == s);
}
