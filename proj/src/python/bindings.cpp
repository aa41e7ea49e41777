#include "tempshift/errors.hpp"
#include "tempshift/experiment.hpp"
#include "tempshift/losses.hpp"
#include "tempshift/metrics.hpp"
#include "tempshift/models.hpp"
#include "tempshift/windowing.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace tempshift;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const float> view(const FloatArray& a) {
    return {a.data(), static_cast<std::size_t>(a.size())};
}

// (W, H, Wpx) volumes; both arrays must agree.
VolumeShape volume_of(const FloatArray& output, const FloatArray& target) {
    if (output.ndim() != 3) throw py::value_error("expected a (frames, height, width) array");
    if (!std::equal(output.shape(), output.shape() + 3, target.shape()) || target.ndim() != 3) {
        throw py::value_error("output and target shapes differ");
    }
    return {static_cast<std::size_t>(output.shape(0)), static_cast<std::size_t>(output.shape(1)),
            static_cast<std::size_t>(output.shape(2))};
}

std::optional<LossWeights> weights_of(const std::optional<std::pair<double, double>>& w) {
    if (!w) return std::nullopt;
    return LossWeights{w->first, w->second};
}

std::vector<std::uint8_t> labels_of(const py::array_t<std::uint8_t, py::array::forcecast>& a) {
    return {a.data(), a.data() + a.size()};
}

py::object report_to_py(const Report& r) {
    return py::module_::import("json").attr("loads")(r.to_json().dump());
}

ExperimentConfig config_from(const std::string& path, const std::optional<std::string>& out) {
    ExperimentConfig c = load_config(path);
    if (out) c.output.directory = *out;
    return c;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Temporal-shift video anomaly detection (C++ core)";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<MetricError>(m, "MetricError", PyExc_ValueError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

    py::class_<ShiftedPair>(m, "ShiftedPair")
        .def_readonly("start", &ShiftedPair::start)
        .def_readonly("input_indices", &ShiftedPair::input_indices)
        .def_readonly("target_indices", &ShiftedPair::target_indices)
        .def_readonly("recon_positions", &ShiftedPair::recon_positions)
        .def_readonly("pred_positions", &ShiftedPair::pred_positions);

    m.def(
        "enumerate_pairs",
        [](std::size_t clip_len, int input_len, int shift, int stride) {
            return enumerate_pairs(clip_len, WindowSpec{input_len, shift, stride});
        },
        py::arg("clip_len"), py::arg("input_len") = 6, py::arg("shift") = 2, py::arg("stride") = 1);

    m.def(
        "frame_coverage",
        [](std::size_t clip_len, int input_len, int shift, int stride) {
            const WindowSpec spec{input_len, shift, stride};
            std::vector<std::pair<ShiftedPair, std::vector<double>>> pe;
            for (auto& p : enumerate_pairs(clip_len, spec)) {
                pe.emplace_back(std::move(p), std::vector<double>(static_cast<std::size_t>(input_len), 0.0));
            }
            return aggregate_frame_scores(pe, clip_len).count;
        },
        py::arg("clip_len"), py::arg("input_len") = 6, py::arg("shift") = 2, py::arg("stride") = 1,
        "Number of windows whose targets cover each frame.");

    m.def(
        "temporal_shift_loss",
        [](const FloatArray& output, const FloatArray& target, int shift,
           std::optional<std::pair<double, double>> weights) {
            const VolumeShape vs = volume_of(output, target);
            const LossBreakdown b = temporal_shift_loss<float>(
                view(output), view(target), vs, WindowSpec{static_cast<int>(vs.frames), shift, 1}, weights_of(weights));
            py::dict d;
            d["total"] = b.total;
            d["recon_component"] = b.recon_component;
            d["pred_component"] = b.pred_component;
            d["recon_weight"] = b.recon_weight;
            d["pred_weight"] = b.pred_weight;
            return d;
        },
        py::arg("output"), py::arg("target"), py::arg("shift"), py::arg("weights") = py::none(),
        "Loss of a (W, H, Wpx) output against its shifted target.");

    m.def(
        "masked_loss",
        [](const FloatArray& output, const FloatArray& target, int shift, const std::string& mode,
           std::optional<std::pair<double, double>> weights) {
            const VolumeShape vs = volume_of(output, target);
            return masked_loss<float>(view(output), view(target), vs, WindowSpec{static_cast<int>(vs.frames), shift, 1},
                                      parse_loss_mode(mode), weights_of(weights));
        },
        py::arg("output"), py::arg("target"), py::arg("shift"), py::arg("mode") = "full",
        py::arg("weights") = py::none());

    m.def(
        "roc_auc",
        [](const DoubleArray& s, const py::array_t<std::uint8_t, py::array::forcecast>& l) {
            return roc_auc(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), labels_of(l));
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "pr_auc",
        [](const DoubleArray& s, const py::array_t<std::uint8_t, py::array::forcecast>& l) {
            return pr_auc(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), labels_of(l));
        },
        py::arg("scores"), py::arg("labels"), "Average precision, no interpolation.");
    m.def(
        "no_skill_pr",
        [](const py::array_t<std::uint8_t, py::array::forcecast>& l) { return no_skill_pr(labels_of(l)); },
        py::arg("labels"));

    py::class_<Model>(m, "Model")
        .def_property_readonly("family", [](const Model& mdl) { return to_string(mdl.spec().family); })
        .def_property_readonly("parameter_count", &Model::parameter_count)
        .def_property_readonly("attention_gate_count", &Model::attention_gate_count)
        .def("latent_shape", [](const Model& mdl, int batch) {
            const auto s = mdl.latent_shape(batch);
            return py::make_tuple(s.n, s.c, s.d, s.h, s.w);
        }, py::arg("batch") = 1)
        .def(
            "predict",
            [](const Model& mdl, const std::vector<FloatArray>& inputs) {
                std::vector<nn::Tensor> ts;
                for (const auto& a : inputs) {
                    if (a.ndim() != 5) throw py::value_error("inputs must be (N, 1, W, H, Wpx) arrays");
                    nn::Tensor t(nn::Shape{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                                           static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3)),
                                           static_cast<int>(a.shape(4))});
                    std::copy(a.data(), a.data() + a.size(), t.data().begin());
                    ts.push_back(std::move(t));
                }
                std::vector<nn::Tensor> outs;
                {
                    py::gil_scoped_release release;
                    outs = mdl.predict(ts);
                }
                py::list result;
                for (const auto& o : outs) {
                    const auto s = o.shape();
                    FloatArray a({s.n, s.c, s.d, s.h, s.w});
                    std::copy(o.data().begin(), o.data().end(), a.mutable_data());
                    result.append(a);
                }
                return result;
            },
            py::arg("inputs"), "One (N, 1, W, H, Wpx) array per modality; returns the outputs.");

    m.def(
        "build_model",
        [](const std::string& family, int input_frames, int height, int width,
           std::vector<int> channel_widths, const std::string& fusion, std::uint64_t seed) {
            ModelSpec spec;
            spec.family = parse_family(family);
            spec.input_frames = input_frames;
            spec.height = height;
            spec.width = width;
            spec.channel_widths = std::move(channel_widths);
            spec.fusion = parse_fusion(fusion);
            spec.seed = seed;
            return build_model(spec);
        },
        py::arg("family") = "3dcae", py::arg("input_frames") = 6, py::arg("height") = 64,
        py::arg("width") = 64, py::arg("channel_widths") = std::vector<int>{16, 32, 64},
        py::arg("fusion") = "concat", py::arg("seed") = 0);

    m.def(
        "generate_synthetic",
        [](std::uint64_t seed, int train_clips, int test_clips, int clip_len, int height, int width,
           bool multimodal) {
            SyntheticOptions o;
            o.seed = seed;
            o.n_train_clips = train_clips;
            o.n_test_clips = test_clips;
            o.clip_len = clip_len;
            o.height = height;
            o.width = width;
            o.multimodal = multimodal;
            const DatasetSplit d = generate_synthetic(o);
            auto convert = [](const std::vector<VideoClip>& clips) {
                py::list out;
                for (const auto& c : clips) {
                    py::dict e;
                    e["clip_id"] = c.clip_id;
                    e["modality"] = c.modality;
                    FloatArray frames({static_cast<py::ssize_t>(c.length()),
                                       static_cast<py::ssize_t>(c.height),
                                       static_cast<py::ssize_t>(c.width)});
                    std::copy(c.frames.begin(), c.frames.end(), frames.mutable_data());
                    e["frames"] = frames;
                    e["labels"] = c.labels ? py::cast(*c.labels) : py::none();
                    out.append(e);
                }
                return out;
            };
            py::dict result;
            result["train"] = convert(d.train);
            result["test"] = convert(d.test);
            return result;
        },
        py::arg("seed"), py::arg("train_clips") = 8, py::arg("test_clips") = 10,
        py::arg("clip_len") = 128, py::arg("height") = 64, py::arg("width") = 64,
        py::arg("multimodal") = false);

    auto experiment = [&m](const char* name, Report (*fn)(const ExperimentConfig&, const Progress&),
                           const char* doc) {
        m.def(
            name,
            [fn](const std::string& config, std::optional<std::string> out) {
                const ExperimentConfig c = config_from(config, out);
                Report r;
                {
                    py::gil_scoped_release release;
                    r = fn(c, {});
                }
                return report_to_py(r);
            },
            py::arg("config"), py::arg("out") = py::none(), doc);
    };
    experiment("run", &run, "Train and score one configuration; returns the report.");
    experiment("sweep", &sweep_windows, "Window sweep over config sweep.pairs.");
    experiment("compare_losses", &compare_losses, "Loss-function comparison.");
    experiment("compare_fusion", &compare_fusion, "Fusion comparison on a modality pair.");

    m.def(
        "score",
        [](const std::string& config, const std::string& checkpoint, std::optional<std::string> out) {
            const ExperimentConfig c = config_from(config, out);
            Report r;
            {
                py::gil_scoped_release release;
                r = score_checkpoint(c, checkpoint);
            }
            return report_to_py(r);
        },
        py::arg("config"), py::arg("checkpoint"), py::arg("out") = py::none());

    m.def("config_hash", [](const std::string& path) { return load_config(path).hash(); },
          py::arg("config"));
}
