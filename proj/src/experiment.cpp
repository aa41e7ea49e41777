#include "tempshift/experiment.hpp"

#include "tempshift/checkpoint.hpp"
#include "tempshift/errors.hpp"
#include "tempshift/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tempshift {

namespace fs = std::filesystem;

namespace {

std::string window_label(const WindowSpec& w) {
    return "W=" + std::to_string(w.input_len) + " S=" + std::to_string(w.shift);
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : sep) + p;
    return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, sep)) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

// File-name-safe form of a column label.
std::string slug(const std::string& s) {
    std::string out;
    for (char c : s) {
        const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '+';
        out += keep ? c : '_';
    }
    return out;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    os << text;
    if (!os) throw DataError("cannot write " + path.string());
}

ExperimentConfig with_window(ExperimentConfig c, int w, int s) {
    c.window.input_len = w;
    c.window.shift = s;
    c.model.input_frames = w;
    return c;
}

// Per-trial failures a sweep records and moves past.
template <typename F>
MetricRow guarded(F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        MetricRow r;
        r.status = std::string("config error: ") + e.what();
        return r;
    } catch (const DataError& e) {
        MetricRow r;
        r.status = std::string("data error: ") + e.what();
        return r;
    } catch (const TrainingError& e) {
        MetricRow r;
        r.status = std::string("training failure: ") + e.what();
        return r;
    } catch (const MetricError& e) {
        MetricRow r;
        r.status = std::string("metric error: ") + e.what();
        return r;
    }
}

MetricRow describe(const TrialSpec& t, MetricRow r) {
    r.row = t.row;
    r.column = t.column;
    r.family = to_string(t.family);
    r.fusion = t.family == Family::Multimodal ? to_string(t.fusion) : "";
    r.loss = t.loss_label;
    r.modalities = t.modalities;
    r.input_len = t.window.input_len;
    r.shift = t.window.shift;
    if (!r.ok()) {
        r.roc = r.pr = r.no_skill = r.final_loss = std::nan("");
    }
    return r;
}

std::vector<TrialSpec> per_modality(const ExperimentConfig& c, const std::vector<std::string>& mods,
                                    const std::string& row, const std::string& loss_label) {
    std::vector<TrialSpec> out;
    TrialSpec base;
    base.row = row;
    base.loss_label = loss_label;
    base.family = c.model.family;
    base.fusion = c.model.fusion;
    base.window = c.window;
    base.mode = c.training.loss_mode;
    if (c.model.family == Family::Multimodal) {
        if (mods.size() != 2) {
            throw ConfigError("the multimodal family needs exactly two modalities, found " +
                              std::to_string(mods.size()) + " (" + join(mods, ", ") + ")");
        }
        base.column = join(mods, "+");
        base.modalities = mods;
        out.push_back(base);
    } else {
        for (const auto& m : mods) {
            TrialSpec t = base;
            t.column = m;
            t.modalities = {m};
            out.push_back(t);
        }
    }
    return out;
}

Report new_report(const std::string& kind, const ExperimentConfig& c, const DatasetSplit& data) {
    Report r;
    r.kind = kind;
    r.config = c.to_json();
    r.config_hash = c.hash();
    r.dataset_hash = data.content_hash();
    return r;
}

MetricRow summarize(const ScoreTrace& trace) {
    MetricRow r;
    r.frames = trace.size();
    r.positives = trace.num_positive();
    r.no_skill = no_skill_pr(trace.labels);
    r.roc = roc_auc(trace);
    r.pr = pr_auc(trace);
    return r;
}

void write_trace_artifacts(const fs::path& dir, const std::string& column, const ScoreTrace& trace,
                           const OutputConfig& out) {
    const std::string tag = slug(column);
    if (out.dump_scores) write_scores(dir / ("scores-" + tag + ".tsv"), trace);
    if (out.plots) {
        const auto roc = roc_curve(trace.scores, trace.labels);
        const auto pr = pr_curve(trace.scores, trace.labels);
        write_file(dir / ("roc-" + tag + ".svg"),
                   svg_curve("ROC, " + column, "false positive rate", "true positive rate", roc, true));
        write_file(dir / ("pr-" + tag + ".svg"),
                   svg_curve("Precision-recall, " + column, "recall", "precision", pr, false,
                             no_skill_pr(trace.labels)));
        write_file(dir / ("timeline-" + tag + ".svg"),
                   svg_timeline("Per-frame scores, " + column, trace));
    }
}

} // namespace

DatasetSplit load_dataset(const ExperimentConfig& config) {
    DatasetSplit data;
    if (config.dataset.source == "synthetic") {
        data = generate_synthetic(config.dataset.synthetic);
    } else {
        LoadOptions lo;
        lo.height = config.model.height;
        lo.width = config.model.width;
        lo.target_fps = config.dataset.fps;
        data = load_directory(config.dataset.manifest, lo);
    }
    data.validate();
    const auto present = data.modalities();
    for (const auto& m : config.dataset.modalities) {
        if (std::find(present.begin(), present.end(), m) == present.end()) {
            throw DataError("dataset has no modality '" + m + "' (found " + join(present, ", ") + ")");
        }
    }
    return data;
}

std::vector<std::string> resolve_modalities(const ExperimentConfig& config,
                                            const DatasetSplit& data) {
    if (!config.dataset.modalities.empty()) return config.dataset.modalities;
    auto mods = data.modalities();
    // Synthetic data carries the inverted copy only for multi-modal work.
    if (config.dataset.source == "synthetic" && config.model.family != Family::Multimodal) {
        mods.erase(std::remove(mods.begin(), mods.end(), kInvertedModality), mods.end());
    }
    return mods;
}

GroupedClips::GroupedClips(const DatasetSplit& data, const std::vector<std::string>& modalities) {
    if (modalities.empty() || modalities.size() > 2) {
        throw ConfigError("a model takes one or two modalities, got " +
                          std::to_string(modalities.size()));
    }
    for (const auto& m : modalities) parts_.push_back(data.select(m));
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        if (parts_[i].train.empty() && parts_[i].test.empty()) {
            throw DataError("no clips for modality '" + modalities[i] + "'");
        }
    }
    if (parts_.size() == 1) {
        for (const auto& c : parts_[0].train) train_.push_back({&c});
        for (const auto& c : parts_[0].test) test_.push_back({&c});
        return;
    }
    for (const auto& [a, b] : pair_modalities(parts_[0].train, parts_[1].train)) train_.push_back({a, b});
    for (const auto& [a, b] : pair_modalities(parts_[0].test, parts_[1].test)) test_.push_back({a, b});
}

std::vector<std::string> GroupedClips::test_ids() const {
    std::vector<std::string> out;
    for (const auto& g : test_) {
        for (const auto* c : g) out.push_back(c->clip_id);
    }
    return out;
}

TrialResult run_trial(const ExperimentConfig& config, const DatasetSplit& data,
                      const TrialSpec& trial, const Progress& progress) {
    ExperimentConfig c = with_window(config, trial.window.input_len, trial.window.shift);
    c.window.stride = trial.window.stride;
    c.model.family = trial.family;
    c.model.fusion = trial.fusion;
    c.training.loss_mode = trial.mode;
    c.validate();
    data.validate();

    const GroupedClips clips(data, trial.modalities);
    std::size_t longest = 0;
    for (const auto& g : clips.train()) longest = std::max(longest, g.front()->length());
    if (longest < static_cast<std::size_t>(c.window.total_len())) {
        throw ConfigError("window " + window_label(c.window) + " needs " +
                          std::to_string(c.window.total_len()) +
                          " frames; the longest train clip has " + std::to_string(longest));
    }

    TrialResult res;
    res.model = build_model(c.model);
    const std::string what = to_string(trial.family) + " " + window_label(c.window) + " " +
                             to_string(trial.mode) + " [" + trial.column + "]";
    res.history = train_model(*res.model, clips.train(), c.window, c.training, &res.audit,
                              [&](int epoch, double loss) {
                                  if (!progress) return;
                                  std::ostringstream os;
                                  os << what << ": epoch " << epoch << "/" << c.training.epochs
                                     << " loss " << loss;
                                  progress(os.str());
                              });

    // Protocol check: nothing from the test split may have reached training.
    for (const auto& id : clips.test_ids()) {
        if (res.audit.touched.contains(id)) {
            throw InternalError("training touched test clip '" + id + "'");
        }
    }

    ScoringOptions so;
    so.positions = trial.mode;
    so.aggregation = c.aggregation;
    so.batch_size = c.training.batch_size;
    res.scoring = score_test_set(*res.model, clips.test(), c.window, so, c.workers);
    res.row = describe(trial, summarize(res.scoring.trace));
    res.row.final_loss = res.history.epoch_loss.empty() ? std::nan("") : res.history.epoch_loss.back();
    if (progress) {
        std::ostringstream os;
        os << what << ": ROC " << res.row.roc << " PR " << res.row.pr << " over "
           << res.row.frames << " frames";
        progress(os.str());
    }
    return res;
}

Report run(const ExperimentConfig& config, const Progress& progress) {
    config.validate();
    const DatasetSplit data = load_dataset(config);
    const auto mods = resolve_modalities(config, data);
    const auto trials = per_modality(config, mods, window_label(config.window),
                                     to_string(config.training.loss_mode));

    Report report = new_report("run", config, data);
    const fs::path dir = config.output.directory;
    fs::create_directories(dir);
    for (const auto& t : trials) {
        TrialResult res = run_trial(config, data, t, progress);
        CheckpointMeta meta;
        meta.seed = config.training.seed;
        meta.config_hash = report.config_hash;
        meta.extra = {{"input_len", std::to_string(t.window.input_len)},
                      {"shift", std::to_string(t.window.shift)},
                      {"stride", std::to_string(t.window.stride)},
                      {"loss_mode", to_string(t.mode)},
                      {"aggregation", to_string(config.aggregation)},
                      {"modalities", join(t.modalities, ",")},
                      {"dataset_hash", report.dataset_hash}};
        const std::string ckpt = "model-" + slug(t.column) + ".ckpt";
        save_checkpoint(dir / ckpt, *res.model, meta);
        res.row.checkpoint = ckpt;
        write_trace_artifacts(dir, t.column, res.scoring.trace, config.output);
        for (const auto& w : res.scoring.warnings) report.warnings.push_back(w);
        report.rows.push_back(res.row);
    }
    write_report(report, config);
    return report;
}

Report sweep_windows(const ExperimentConfig& config, const Progress& progress) {
    config.validate();
    const DatasetSplit data = load_dataset(config);
    const auto mods = resolve_modalities(config, data);
    Report report = new_report("sweep", config, data);
    for (const auto& [w, s] : config.sweep_pairs) {
        const ExperimentConfig c = with_window(config, w, s);
        for (const auto& t : per_modality(c, mods, window_label(c.window), to_string(c.training.loss_mode))) {
            report.rows.push_back(describe(t, guarded([&] {
                TrialResult res = run_trial(c, data, t, progress);
                for (const auto& wn : res.scoring.warnings) report.warnings.push_back(wn);
                return res.row;
            })));
        }
    }
    write_report(report, config);
    return report;
}

Report compare_losses(const ExperimentConfig& config, const Progress& progress) {
    config.validate();
    const DatasetSplit data = load_dataset(config);
    ExperimentConfig single = config;
    if (single.model.family == Family::Multimodal) single.model.family = Family::Cae3d;
    const auto mods = resolve_modalities(single, data);
    Report report = new_report("compare-losses", config, data);

    const int w = config.window.input_len;
    const int s = config.window.shift;
    struct Column {
        const char* label;
        int w, s;
        LossMode mode;
    };
    const Column recon{"reconstruction", w + s, 0, LossMode::Full};
    const Column pred{"prediction", w, s, LossMode::PredOnly};
    const Column shift{"temporal shift", w, s, LossMode::Full};
    const std::vector<std::pair<Family, std::vector<Column>>> plan{
        {Family::Cae3d, {recon, pred, shift}},
        {Family::AttentionUnet, {recon, shift}},
    };
    for (const auto& [family, columns] : plan) {
        for (const auto& col : columns) {
            ExperimentConfig c = with_window(single, col.w, col.s);
            c.model.family = family;
            c.training.loss_mode = col.mode;
            const std::string row = to_string(family) + " / " + col.label;
            for (auto t : per_modality(c, mods, row, col.label)) {
                report.rows.push_back(describe(t, guarded([&] {
                    TrialResult res = run_trial(c, data, t, progress);
                    for (const auto& wn : res.scoring.warnings) report.warnings.push_back(wn);
                    return res.row;
                })));
            }
        }
    }
    write_report(report, config);
    return report;
}

Report compare_fusion(const ExperimentConfig& config, const Progress& progress) {
    ExperimentConfig base = config;
    base.model.family = Family::Multimodal;
    if (base.dataset.source == "synthetic") {
        base.dataset.synthetic.multimodal = true;
        if (base.dataset.modalities.empty()) base.dataset.modalities = {kIntensityModality, kInvertedModality};
    }
    base.validate();
    const DatasetSplit data = load_dataset(base);
    const auto mods = resolve_modalities(base, data);
    if (mods.size() != 2) {
        throw ConfigError("compare-fusion needs exactly two modalities, found " +
                          std::to_string(mods.size()) + " (" + join(mods, ", ") +
                          "); set dataset.modalities");
    }
    // Alignment problems are data errors, raised before any training.
    { const GroupedClips check(data, mods); }

    Report report = new_report("compare-fusion", base, data);
    const int w = base.window.input_len;
    const int s = base.window.shift;
    for (Fusion f : {Fusion::Concat, Fusion::Add, Fusion::Multiply}) {
        for (const auto& [label, cw, cs] : {std::tuple{"reconstruction", w + s, 0},
                                            std::tuple{"temporal shift", w, s}}) {
            ExperimentConfig c = with_window(base, cw, cs);
            c.model.fusion = f;
            c.training.loss_mode = LossMode::Full;
            const std::string row = to_string(f) + " / " + label;
            for (auto t : per_modality(c, mods, row, label)) {
                report.rows.push_back(describe(t, guarded([&] {
                    TrialResult res = run_trial(c, data, t, progress);
                    for (const auto& wn : res.scoring.warnings) report.warnings.push_back(wn);
                    return res.row;
                })));
            }
        }
    }
    write_report(report, base);
    return report;
}

Report score_checkpoint(const ExperimentConfig& config, const fs::path& checkpoint,
                        const std::optional<fs::path>& manifest, const Progress& progress) {
    ExperimentConfig c = config;
    if (manifest) {
        c.dataset.source = "manifest";
        c.dataset.manifest = *manifest;
    }
    LoadedCheckpoint ck = load_checkpoint(checkpoint);
    const ModelSpec& spec = ck.model->spec();
    auto extra = [&](const std::string& key) -> std::string {
        const auto it = ck.meta.extra.find(key);
        if (it == ck.meta.extra.end()) {
            throw DataError("checkpoint " + checkpoint.string() + ": missing '" + key + "'");
        }
        return it->second;
    };
    WindowSpec window;
    LossMode mode;
    Aggregation aggregation;
    try {
        window.input_len = std::stoi(extra("input_len"));
        window.shift = std::stoi(extra("shift"));
        window.stride = std::stoi(extra("stride"));
        mode = parse_loss_mode(extra("loss_mode"));
        aggregation = parse_aggregation(extra("aggregation"));
    } catch (const std::logic_error& e) {
        throw DataError("checkpoint " + checkpoint.string() + ": bad window metadata: " + e.what());
    } catch (const ConfigError& e) {
        throw DataError("checkpoint " + checkpoint.string() + ": " + e.what());
    }
    c = with_window(c, window.input_len, window.shift);
    c.window.stride = window.stride;
    c.model = spec;
    c.aggregation = aggregation;
    c.training.loss_mode = mode;
    const auto mods = split(extra("modalities"), ',');
    if (c.dataset.source == "synthetic" && mods.size() == 2) c.dataset.synthetic.multimodal = true;
    c.validate();

    const DatasetSplit data = load_dataset(c);
    // Pin the checkpoint's modalities only where the config would pick others,
    // so an unchanged config hashes as it did for training.
    if (resolve_modalities(c, data) != mods) c.dataset.modalities = mods;
    const GroupedClips clips(data, mods);
    ScoringOptions so;
    so.positions = mode;
    so.aggregation = aggregation;
    so.batch_size = c.training.batch_size;
    const TestScoring scoring = score_test_set(*ck.model, clips.test(), window, so, c.workers);

    TrialSpec t;
    t.row = window_label(window);
    t.column = join(mods, "+");
    t.loss_label = to_string(mode);
    t.family = spec.family;
    t.fusion = spec.fusion;
    t.window = window;
    t.mode = mode;
    t.modalities = mods;
    MetricRow row = describe(t, summarize(scoring.trace));
    row.final_loss = std::nan("");
    row.checkpoint = checkpoint.string();
    if (progress) {
        std::ostringstream os;
        os << "scored " << checkpoint.string() << ": ROC " << row.roc << " PR " << row.pr;
        progress(os.str());
    }

    Report report = new_report("score", c, data);
    report.rows.push_back(row);
    report.warnings = scoring.warnings;
    if (ck.meta.config_hash != report.config_hash) {
        report.warnings.push_back("checkpoint was trained under config " + ck.meta.config_hash);
    }
    fs::create_directories(c.output.directory);
    write_trace_artifacts(c.output.directory, t.column, scoring.trace, c.output);
    write_report(report, c);
    return report;
}

void write_report(const Report& report, const ExperimentConfig& config) {
    const fs::path dir = config.output.directory;
    fs::create_directories(dir);
    for (const auto& f : config.output.formats) {
        if (f == "json") write_file(dir / "metrics.json", report.to_json().dump(2) + "\n");
        else if (f == "csv") write_file(dir / "metrics.csv", report.to_csv());
        else if (f == "txt") write_file(dir / "metrics.txt", report.to_text());
    }
    write_file(dir / "config.resolved.json", config.to_json().dump(2) + "\n");
}

void write_scores(const fs::path& path, const ScoreTrace& trace) {
    std::ofstream os(path);
    os << "# score label\n";
    char buf[40];
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", trace.scores[i]);
        os << buf << ' ' << static_cast<int>(trace.labels[i]) << '\n';
    }
    if (!os) throw DataError("cannot write " + path.string());
}

} // namespace tempshift
