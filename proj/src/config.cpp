#include "tempshift/config.hpp"

#include "tempshift/errors.hpp"
#include "tempshift/hash.hpp"

#include <fstream>
#include <set>

namespace tempshift {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Walks one JSON object, collecting problems instead of throwing on the first.
class Section {
public:
    Section(const json* node, std::string path, std::vector<std::string>& errors)
        : node_(node), path_(std::move(path)), errors_(errors) {
        if (node_ && !node_->is_object()) {
            fail("", "must be an object");
            node_ = nullptr;
        }
    }

    ~Section() {
        if (!node_) return;
        for (const auto& [key, value] : node_->items()) {
            if (!seen_.contains(key)) fail(key, "unknown key");
        }
    }

    Section child(const std::string& key) {
        seen_.insert(key);
        return Section(lookup(key), join(key), errors_);
    }

    bool has(const std::string& key) const { return node_ && node_->contains(key); }
    bool is_null(const std::string& key) const { return has(key) && lookup(key)->is_null(); }

    void read(const std::string& key, int& out, bool required = false) {
        if (const json* v = take(key, required)) {
            if (v->is_number_integer()) out = v->get<int>();
            else fail(key, "must be an integer");
        }
    }

    void read(const std::string& key, std::uint64_t& out, bool required = false) {
        if (const json* v = take(key, required)) {
            if (v->is_number_integer() && v->get<std::int64_t>() >= 0) out = v->get<std::uint64_t>();
            else fail(key, "must be a non-negative integer");
        }
    }

    void read(const std::string& key, double& out, bool required = false) {
        if (const json* v = take(key, required)) {
            if (v->is_number()) out = v->get<double>();
            else fail(key, "must be a number");
        }
    }

    void read(const std::string& key, bool& out, bool required = false) {
        if (const json* v = take(key, required)) {
            if (v->is_boolean()) out = v->get<bool>();
            else fail(key, "must be true or false");
        }
    }

    void read(const std::string& key, std::string& out, bool required = false) {
        if (const json* v = take(key, required)) {
            if (v->is_string()) out = v->get<std::string>();
            else fail(key, "must be a string");
        }
    }

    void read(const std::string& key, std::vector<int>& out) {
        if (const json* v = take(key, false)) {
            if (!v->is_array()) return fail(key, "must be an array of integers");
            std::vector<int> vals;
            for (const auto& e : *v) {
                if (!e.is_number_integer()) return fail(key, "must be an array of integers");
                vals.push_back(e.get<int>());
            }
            out = std::move(vals);
        }
    }

    void read(const std::string& key, std::vector<std::string>& out) {
        if (const json* v = take(key, false)) {
            if (!v->is_array()) return fail(key, "must be an array of strings");
            std::vector<std::string> vals;
            for (const auto& e : *v) {
                if (!e.is_string()) return fail(key, "must be an array of strings");
                vals.push_back(e.get<std::string>());
            }
            out = std::move(vals);
        }
    }

    // Enumerations and other parsed strings; `parse` throws ConfigError.
    template <typename T, typename Parse>
    void read_enum(const std::string& key, T& out, Parse parse) {
        std::string name;
        if (!has(key)) {
            seen_.insert(key);
            return;
        }
        const std::size_t before = errors_.size();
        read(key, name);
        if (errors_.size() != before) return;
        try {
            out = parse(name);
        } catch (const ConfigError& e) {
            fail(key, e.what());
        }
    }

    const json* take(const std::string& key, bool required) {
        seen_.insert(key);
        const json* v = lookup(key);
        if (!v && required) fail(key, "is required");
        return v;
    }

    void fail(const std::string& key, const std::string& what) {
        errors_.push_back(join(key) + ": " + what);
    }

    std::string join(const std::string& key) const {
        if (key.empty()) return path_;
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    const json* lookup(const std::string& key) const {
        if (!node_) return nullptr;
        const auto it = node_->find(key);
        return it == node_->end() ? nullptr : &*it;
    }

    const json* node_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
};

std::string join_lines(const std::vector<std::string>& errors) {
    std::string msg = "invalid configuration (" + std::to_string(errors.size()) + " problem" +
                      (errors.size() == 1 ? "" : "s") + "):";
    for (const auto& e : errors) msg += "\n  - " + e;
    return msg;
}

void collect(std::vector<std::string>& errors, const auto& check) {
    try {
        check();
    } catch (const ConfigError& e) {
        // Sub-validators join their own findings with "; ".
        const std::string text = e.what();
        std::size_t pos = 0;
        while (true) {
            const auto next = text.find("; ", pos);
            errors.push_back(text.substr(pos, next - pos));
            if (next == std::string::npos) break;
            pos = next + 2;
        }
    }
}

} // namespace

void ExperimentConfig::validate() const {
    const auto errors = problems();
    if (!errors.empty()) throw ConfigError(join_lines(errors));
}

std::vector<std::string> ExperimentConfig::problems() const {
    std::vector<std::string> errors;
    collect(errors, [&] { window.validate(); });
    collect(errors, [&] { model.validate(); });
    if (model.input_frames != window.input_len) {
        errors.push_back("model input frames (" + std::to_string(model.input_frames) +
                         ") must equal window.input_len (" + std::to_string(window.input_len) + ")");
    }

    if (dataset.source == "synthetic") {
        collect(errors, [&] { dataset.synthetic.validate(); });
        if (dataset.synthetic.clip_len < window.total_len()) {
            errors.push_back("window.input_len + window.shift (" +
                             std::to_string(window.total_len()) +
                             ") exceeds dataset.synthetic.clip_len (" +
                             std::to_string(dataset.synthetic.clip_len) + ")");
        }
        for (const auto& m : dataset.modalities) {
            if (m != kIntensityModality && m != kInvertedModality) {
                errors.push_back("dataset.modalities: synthetic data has no modality '" + m + "'");
            }
        }
    } else if (dataset.source == "manifest") {
        if (dataset.manifest.empty()) errors.push_back("dataset.manifest: is required for source 'manifest'");
    } else {
        errors.push_back("dataset.source: must be 'synthetic' or 'manifest', got '" +
                         dataset.source + "'");
    }
    if (!(dataset.fps > 0.0)) errors.push_back("dataset.fps: must be positive");
    if (model.family == Family::Multimodal && !dataset.modalities.empty() &&
        dataset.modalities.size() != 2) {
        errors.push_back("dataset.modalities: the multimodal family takes exactly two modalities");
    }

    if (training.epochs < 0) errors.push_back("training.epochs: must be >= 0");
    if (training.batch_size < 1) errors.push_back("training.batch_size: must be >= 1");
    if (!(training.learning_rate > 0.0)) errors.push_back("training.learning_rate: must be positive");
    if (training.loss_mode == LossMode::PredOnly && window.shift == 0) {
        errors.push_back("loss.mode: pred-only needs window.shift > 0");
    }
    if (training.loss_mode == LossMode::ReconOnly && window.shift == window.input_len) {
        errors.push_back("loss.mode: recon-only needs window.shift < window.input_len");
    }
    if (training.loss_weights) {
        const auto& w = *training.loss_weights;
        if (!(w.recon >= 0.0) || !(w.pred >= 0.0) || !(w.recon + w.pred > 0.0)) {
            errors.push_back("loss.weights: recon and pred must be >= 0 and not both zero");
        }
    }

    for (const auto& [w, s] : sweep_pairs) {
        if (w < 1 || s < 0 || s > w) {
            errors.push_back("sweep.pairs: (" + std::to_string(w) + ", " + std::to_string(s) +
                             ") needs W >= 1 and 0 <= S <= W");
        }
    }
    for (const auto& f : output.formats) {
        if (f != "json" && f != "csv" && f != "txt") {
            errors.push_back("output.formats: unknown format '" + f + "' (json, csv, txt)");
        }
    }
    if (workers < 1) errors.push_back("runtime.workers: must be >= 1");
    if (device != "cpu") {
        errors.push_back("runtime.device: '" + device + "' is not available; this build runs on cpu");
    }
    return errors;
}

ExperimentConfig parse_config(const json& j) {
    std::vector<std::string> errors;
    ExperimentConfig c;
    {
        Section root(&j, "", errors);
        {
            Section d = root.child("dataset");
            d.read("source", c.dataset.source);
            std::string manifest;
            d.read("manifest", manifest);
            c.dataset.manifest = manifest;
            d.read("modalities", c.dataset.modalities);
            d.read("fps", c.dataset.fps);
            Section s = d.child("synthetic");
            if (c.dataset.source == "synthetic") {
                s.read("seed", c.dataset.synthetic.seed, true);
            } else {
                s.read("seed", c.dataset.synthetic.seed);
            }
            s.read("train_clips", c.dataset.synthetic.n_train_clips);
            s.read("test_clips", c.dataset.synthetic.n_test_clips);
            s.read("clip_len", c.dataset.synthetic.clip_len);
            s.read("anomaly_rate", c.dataset.synthetic.anomaly_rate);
        }
        {
            Section w = root.child("window");
            w.read("input_len", c.window.input_len);
            w.read("shift", c.window.shift);
            w.read("stride", c.window.stride);
            w.read_enum("aggregation", c.aggregation, parse_aggregation);
        }
        bool model_seed_given = false;
        {
            Section m = root.child("model");
            m.read_enum("family", c.model.family, parse_family);
            m.read("channel_widths", c.model.channel_widths);
            std::vector<int> frame = {c.model.height, c.model.width};
            m.read("frame_size", frame);
            if (frame.size() == 2) {
                c.model.height = frame[0];
                c.model.width = frame[1];
            } else {
                m.fail("frame_size", "must be [height, width]");
            }
            m.read_enum("fusion", c.model.fusion, parse_fusion);
            model_seed_given = m.has("seed");
            m.read("seed", c.model.seed);
        }
        {
            Section t = root.child("training");
            t.read("epochs", c.training.epochs);
            t.read("batch_size", c.training.batch_size);
            t.read("learning_rate", c.training.learning_rate);
            t.read("seed", c.training.seed, true);
            t.read("prior_output_bias", c.training.prior_output_bias);
        }
        if (!model_seed_given) c.model.seed = c.training.seed;
        {
            Section l = root.child("loss");
            l.read_enum("mode", c.training.loss_mode, parse_loss_mode);
            if (l.has("weights") && !l.is_null("weights")) {
                Section w = l.child("weights");
                LossWeights lw;
                w.read("recon", lw.recon, true);
                w.read("pred", lw.pred, true);
                c.training.loss_weights = lw;
            } else {
                l.take("weights", false);
            }
        }
        {
            Section o = root.child("output");
            std::string dir = c.output.directory.string();
            o.read("directory", dir);
            c.output.directory = dir;
            o.read("formats", c.output.formats);
            o.read("plots", c.output.plots);
            o.read("dump_scores", c.output.dump_scores);
        }
        {
            Section s = root.child("sweep");
            if (const json* pairs = s.take("pairs", false)) {
                c.sweep_pairs.clear();
                bool ok = pairs->is_array();
                if (ok) {
                    for (const auto& p : *pairs) {
                        if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
                            !p[1].is_number_integer()) {
                            ok = false;
                            break;
                        }
                        c.sweep_pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
                    }
                }
                if (!ok) s.fail("pairs", "must be an array of [W, S] integer pairs");
            }
        }
        {
            Section r = root.child("runtime");
            r.read("workers", c.workers);
            r.read("device", c.device);
        }
    }
    c.model.input_frames = c.window.input_len;
    c.dataset.synthetic.height = c.model.height;
    c.dataset.synthetic.width = c.model.width;
    c.dataset.synthetic.fps = c.dataset.fps;
    c.dataset.synthetic.multimodal = false;
    for (const auto& m : c.dataset.modalities) {
        if (m == kInvertedModality) c.dataset.synthetic.multimodal = true;
    }
    if (c.model.family == Family::Multimodal) c.dataset.synthetic.multimodal = true;

    for (auto& e : c.problems()) errors.push_back(std::move(e));
    if (!errors.empty()) throw ConfigError(join_lines(errors));
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    json j;
    try {
        j = json::parse(is, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
    config.training.seed = seed;
    config.model.seed = seed;
}

json ExperimentConfig::to_json() const {
    json j;
    j["dataset"] = {
        {"source", dataset.source},
        {"manifest", dataset.manifest.string()},
        {"modalities", dataset.modalities},
        {"fps", dataset.fps},
        {"synthetic",
         {{"seed", dataset.synthetic.seed},
          {"train_clips", dataset.synthetic.n_train_clips},
          {"test_clips", dataset.synthetic.n_test_clips},
          {"clip_len", dataset.synthetic.clip_len},
          {"anomaly_rate", dataset.synthetic.anomaly_rate}}},
    };
    j["window"] = {{"input_len", window.input_len},
                   {"shift", window.shift},
                   {"stride", window.stride},
                   {"aggregation", to_string(aggregation)}};
    j["model"] = {{"family", to_string(model.family)},
                  {"channel_widths", model.channel_widths},
                  {"frame_size", {model.height, model.width}},
                  {"fusion", to_string(model.fusion)},
                  {"seed", model.seed}};
    j["training"] = {{"epochs", training.epochs},
                     {"batch_size", training.batch_size},
                     {"learning_rate", training.learning_rate},
                     {"seed", training.seed},
                     {"prior_output_bias", training.prior_output_bias}};
    j["loss"] = {{"mode", to_string(training.loss_mode)}, {"weights", nullptr}};
    if (training.loss_weights) {
        j["loss"]["weights"] = {{"recon", training.loss_weights->recon},
                                {"pred", training.loss_weights->pred}};
    }
    json pairs = json::array();
    for (const auto& [w, s] : sweep_pairs) pairs.push_back({w, s});
    j["sweep"] = {{"pairs", pairs}};
    j["output"] = {{"directory", output.directory.string()},
                   {"formats", output.formats},
                   {"plots", output.plots},
                   {"dump_scores", output.dump_scores}};
    j["runtime"] = {{"workers", workers}, {"device", device}};
    return j;
}

std::string ExperimentConfig::hash() const {
    json j = to_json();
    j.erase("output");
    j.erase("runtime");
    return hash_hex(j.dump());
}

} // namespace tempshift
