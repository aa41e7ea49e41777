// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "oracles.hpp"

#include "tempshift/checkpoint.hpp"
#include "tempshift/errors.hpp"
#include "tempshift/experiment.hpp"
#include "tempshift/losses.hpp"
#include "tempshift/metrics.hpp"
#include "tempshift/random.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace tempshift;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

Outcome windowing_oracle() {
    const auto t0 = Clock::now();
    long cases = 0;
    for (std::size_t T = 0; T <= 64; ++T) {
        for (int W : {4, 6, 8, 10}) {
            for (int S = 0; S <= std::min(4, W); ++S) {
                for (int stride : {1, 2, 3}) {
                    ++cases;
                    const WindowSpec spec{W, S, stride};
                    const auto got = enumerate_pairs(T, spec);
                    const auto want = oracle::pairs(T, W, S, stride);
                    if (got.size() != want.size()) {
                        return {false, "pair count differs at T=" + std::to_string(T)};
                    }
                    std::vector<std::pair<ShiftedPair, std::vector<double>>> pe;
                    for (std::size_t i = 0; i < got.size(); ++i) {
                        if (got[i].start != want[i].start || got[i].input_indices != want[i].input ||
                            got[i].target_indices != want[i].target) {
                            return {false, "pair differs at T=" + std::to_string(T)};
                        }
                        pe.emplace_back(got[i], std::vector<double>(static_cast<std::size_t>(W), 1.0));
                    }
                    if (aggregate_frame_scores(pe, T).count != oracle::coverage(T, W, S, stride)) {
                        return {false, "coverage differs at T=" + std::to_string(T)};
                    }
                }
            }
        }
    }
    const double s = seconds_since(t0);
    return {s < 10.0, std::to_string(cases) + " cases in " + fmt(s, 3) + " s (limit 10 s)"};
}

Outcome canonical_split() {
    const auto pairs = enumerate_pairs(8, {6, 2, 1});
    if (pairs.size() != 1) return {false, std::to_string(pairs.size()) + " pairs"};
    const auto& p = pairs[0];
    const std::vector<std::size_t> in{0, 1, 2, 3, 4, 5}, tg{2, 3, 4, 5, 6, 7};
    const bool ok = p.input_indices == in && p.target_indices == tg && p.recon_positions.size() == 4 &&
                    p.pred_positions.size() == 2 && p.pred_positions[0] == 4 && p.pred_positions[1] == 5;
    return {ok, "input [0..5], target [2..7], 4 reconstructed + 2 predicted"};
}

Outcome loss_decomposition() {
    Rng rng(31);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int W = rng.between(1, 10);
        const int S = rng.between(0, W);
        const VolumeShape vs{static_cast<std::size_t>(W), 4, 4};
        std::vector<double> o(vs.size()), t(vs.size());
        for (auto& v : o) v = rng.uniform();
        for (auto& v : t) v = rng.uniform();
        const auto b = temporal_shift_loss<double>(o, t, vs, {W, S, 1});
        worst = std::max(worst, rel(b.recon_weight * b.recon_component + b.pred_weight * b.pred_component, b.total));
        double acc = 0;
        for (std::size_t i = 0; i < vs.size(); ++i) acc += (o[i] - t[i]) * (o[i] - t[i]);
        worst = std::max(worst, rel(b.total, acc / static_cast<double>(vs.size())));
    }
    bool exact = true;
    for (int W : {1, 4, 6, 8}) {
        const VolumeShape vs{static_cast<std::size_t>(W), 5, 3};
        std::vector<double> o(vs.size()), t(vs.size());
        for (auto& v : o) v = rng.uniform();
        for (auto& v : t) v = rng.uniform();
        double acc = 0;
        for (std::size_t i = 0; i < vs.size(); ++i) acc += (o[i] - t[i]) * (o[i] - t[i]);
        exact = exact && temporal_shift_loss<double>(o, t, vs, {W, 0, 1}).total == acc / static_cast<double>(vs.size());
    }
    return {worst <= 1e-6 && exact,
            "max relative deviation " + fmt(worst, 3) + " (limit 1e-6); S=0 equals MSE exactly: " +
                (exact ? "yes" : "no")};
}

Outcome loss_gradient() {
    Rng rng(32);
    const double h = 1e-4;
    double worst = 0;
    for (LossMode mode : {LossMode::Full, LossMode::ReconOnly, LossMode::PredOnly}) {
        for (int trial = 0; trial < 10; ++trial) {
            const int W = rng.between(2, 8);
            const int S = rng.between(1, W - 1);
            const VolumeShape vs{static_cast<std::size_t>(W), 2, 4};
            const WindowSpec spec{W, S, 1};
            std::vector<double> o(vs.size()), t(vs.size());
            for (auto& v : o) v = rng.uniform();
            for (auto& v : t) v = rng.uniform();
            const auto g = masked_loss_gradient<double>(o, t, vs, spec, mode);
            for (std::size_t i = 0; i < o.size(); ++i) {
                const double keep = o[i];
                o[i] = keep + h;
                const double up = masked_loss<double>(o, t, vs, spec, mode);
                o[i] = keep - h;
                const double down = masked_loss<double>(o, t, vs, spec, mode);
                o[i] = keep;
                const double fd = (up - down) / (2 * h);
                worst = std::max(worst, std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), 1e-8}));
            }
        }
    }
    return {worst <= 1e-3, "full, recon-only, pred-only; max relative error " + fmt(worst, 3) + " (limit 1e-3)"};
}

Outcome model_invariants() {
    std::string problems;
    Rng rng(33);
    for (Family f : {Family::Cae3d, Family::AttentionUnet, Family::Multimodal}) {
        for (int W : {4, 6, 8}) {
            ModelSpec s;
            s.family = f;
            s.input_frames = W;
            s.seed = 5;
            const auto m = build_model(s);
            std::vector<nn::Tensor> in;
            for (int k = 0; k < m->num_modalities(); ++k) {
                nn::Tensor x(m->input_shape(1));
                for (auto& v : x.data()) v = static_cast<float>(rng.uniform());
                in.push_back(x);
            }
            for (const auto& o : m->predict(in)) {
                if (!(o.shape() == in[0].shape())) problems += " shape(" + to_string(f) + ")";
                for (float v : o.data()) {
                    if (!(v >= 0.f && v <= 1.f)) {
                        problems += " range(" + to_string(f) + ")";
                        break;
                    }
                }
            }
        }
    }

    ModelSpec us;
    us.family = Family::AttentionUnet;
    const auto unet = build_model(us);
    if (unet->attention_gate_count() != 2) problems += " gate count";
    nn::Graph g;
    nn::Tensor x(unet->input_shape(1));
    for (auto& v : x.data()) v = static_cast<float>(rng.uniform());
    const std::vector<nn::Var> vs{g.input(x)};
    const auto res = static_cast<const Model&>(*unet).forward(g, vs);
    const auto consumers = g.consumers(res.taps.at("enc1"));
    if (consumers.size() != 1 || g.op(consumers[0]) != "conv3d") problems += " finest skip";
    double worst = 0;
    for (const char* tap : {"gate2.mask", "gate3.mask"}) {
        const nn::Tensor& mask = g.value(res.taps.at(tap));
        const nn::Shape s = mask.shape();
        for (int d = 0; d < s.d; ++d) {
            for (int h = 0; h < s.h; ++h) {
                double sum = 0;
                for (int w = 0; w < s.w; ++w) sum += mask.at(0, 0, d, h, w);
                worst = std::max(worst, std::abs(sum - 1.0));
            }
        }
    }
    if (worst > 1e-5) problems += " mask sum";

    nn::Tensor a(nn::Shape{1, 64, 6, 8, 8});
    for (auto& v : a.data()) v = static_cast<float>(rng.uniform(-1, 1));
    const nn::Tensor sum = fuse(a, nn::Tensor(a.shape(), 0.0f), Fusion::Add);
    const nn::Tensor prod = fuse(a, nn::Tensor(a.shape(), 1.0f), Fusion::Multiply);
    const nn::Tensor cat = fuse(a, a, Fusion::Concat);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (sum[i] != a[i] || prod[i] != a[i]) {
            problems += " fusion identity";
            break;
        }
    }
    if (!(cat.shape() == nn::Shape{1, 128, 6, 8, 8})) problems += " concat shape";

    return {problems.empty(), problems.empty()
                                  ? "3 families x W {4,6,8} at 64x64; 2 gates; mask sums within " + fmt(worst, 2)
                                  : "failed:" + problems};
}

Outcome metric_oracle() {
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed + 500);
        const auto n = static_cast<std::size_t>(rng.between(2, 200));
        const int levels = rng.between(2, 50);
        std::vector<double> s;
        std::vector<std::uint8_t> y;
        for (std::size_t i = 0; i < n; ++i) {
            y.push_back(rng.uniform() < 0.3);
            s.push_back(static_cast<double>(rng.between(0, levels)) + (y.back() ? 3.0 : 0.0));
        }
        y[0] = 1;
        y[1] = 0;
        worst = std::max(worst, std::abs(roc_auc(s, y) - oracle::roc_auc(s, y)));
        worst = std::max(worst, std::abs(pr_auc(s, y) - oracle::average_precision(s, y)));
    }
    const double roc = roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<std::uint8_t>{0, 0, 1, 1});
    const double ap = pr_auc(std::vector<double>{0.9, 0.8, 0.7, 0.6}, std::vector<std::uint8_t>{1, 0, 1, 0});
    const bool hand = roc == 0.75 && std::abs(ap - 5.0 / 6.0) < 1e-12;
    return {worst <= 1e-9 && hand, "100 datasets, max deviation " + fmt(worst, 3) + " (limit 1e-9); hand ROC " +
                                       fmt(roc) + ", AP " + fmt(ap)};
}

// Shared state of the end-to-end criteria.
struct Benchmark {
    ExperimentConfig config;
    DatasetSplit data;
    TrialSpec trial;
    TrialResult first;
    double seconds = 0;
};

ExperimentConfig benchmark_config() {
    const nlohmann::json j = nlohmann::json::parse(R"({
        "dataset": {"source": "synthetic",
                    "synthetic": {"seed": 2024, "train_clips": 6, "test_clips": 10,
                                  "clip_len": 96, "anomaly_rate": 0.05}},
        "window": {"input_len": 6, "shift": 2},
        "model": {"family": "3dcae", "frame_size": [64, 64]},
        "training": {"epochs": 4, "seed": 1}
    })");
    return parse_config(j);
}

Outcome synthetic_benchmark(Benchmark& b) {
    const auto t0 = Clock::now();
    b.config = benchmark_config();
    b.data = load_dataset(b.config);
    b.trial.row = "W=6 S=2";
    b.trial.column = kIntensityModality;
    b.trial.loss_label = "temporal shift";
    b.trial.window = b.config.window;
    b.trial.modalities = {kIntensityModality};
    b.first = run_trial(b.config, b.data, b.trial);
    b.seconds = seconds_since(t0);
    const double roc = b.first.row.roc;

    // Shuffled labels: mean over 20 seeded permutations, plus the first one alone.
    const ScoreTrace& trace = b.first.scoring.trace;
    double mean = 0, single = 0;
    constexpr int kPerms = 20;
    for (int k = 0; k < kPerms; ++k) {
        std::vector<std::uint8_t> labels = trace.labels;
        Rng rng(derive_seed(99, "shuffle-" + std::to_string(k)));
        rng.shuffle(labels.begin(), labels.end());
        const double r = roc_auc(trace.scores, labels);
        if (k == 0) single = r;
        mean += r / kPerms;
    }
    const bool ok = roc >= 0.75 && roc > 0.5 && std::abs(mean - 0.5) <= 0.05 && b.seconds <= 600.0;
    return {ok, "ROC " + fmt(roc) + " (need >= 0.75), PR " + fmt(b.first.row.pr) + " over " +
                    std::to_string(trace.size()) + " frames in " + fmt(b.seconds, 3) +
                    " s; shuffled-label ROC mean " + fmt(mean) + " (need 0.5 +/- 0.05), single " + fmt(single)};
}

Outcome determinism(Benchmark& b) {
    if (!b.first.model) return {false, "benchmark did not run"};
    const TrialResult again = run_trial(b.config, b.data, b.trial);
    const double d_roc = rel(again.row.roc, b.first.row.roc);
    const double d_pr = rel(again.row.pr, b.first.row.pr);

    const fs::path ckpt = fs::temp_directory_path() / "tempshift-acceptance.ckpt";
    save_checkpoint(ckpt, *b.first.model, {b.config.training.seed, b.config.hash(), {}});
    const LoadedCheckpoint loaded = load_checkpoint(ckpt, b.config.model);
    fs::remove(ckpt);
    const GroupedClips clips(b.data, b.trial.modalities);
    ScoringOptions so;
    so.batch_size = b.config.training.batch_size;
    const TestScoring rescored = score_test_set(*loaded.model, clips.test(), b.config.window, so);
    const double r_roc = rel(roc_auc(rescored.trace), b.first.row.roc);
    const double r_pr = rel(pr_auc(rescored.trace), b.first.row.pr);

    const bool ok = d_roc <= 1e-5 && d_pr <= 1e-5 && r_roc <= 1e-6 && r_pr <= 1e-6;
    return {ok, "rerun ROC/PR deviation " + fmt(d_roc, 2) + "/" + fmt(d_pr, 2) +
                    " (limit 1e-5); checkpoint reload " + fmt(r_roc, 2) + "/" + fmt(r_pr, 2) + " (limit 1e-6)"};
}

Outcome protocol(Benchmark& b) {
    if (!b.first.model) return {false, "benchmark did not run"};
    std::size_t touched_test = 0;
    for (const auto& c : b.data.test) touched_test += b.first.audit.touched.contains(c.clip_id);
    std::size_t anomalous_train = 0;
    for (const auto& c : b.data.train) anomalous_train += c.num_anomalous();

    DatasetSplit tainted = b.data;
    tainted.train[0].labels = std::vector<std::uint8_t>(tainted.train[0].length(), 0);
    (*tainted.train[0].labels)[10] = 1;
    bool rejected = false;
    try {
        tainted.validate();
    } catch (const DataError&) {
        rejected = true;
    }
    bool trial_rejected = false;
    try {
        TrialSpec quick = b.trial;
        ExperimentConfig c = b.config;
        c.training.epochs = 0;
        run_trial(c, tainted, quick);
    } catch (const DataError&) {
        trial_rejected = true;
    }
    const bool ok = touched_test == 0 && b.first.audit.touched.size() == b.data.train.size() &&
                    anomalous_train == 0 && rejected && trial_rejected;
    return {ok, std::to_string(b.first.audit.touched.size()) + " train clips read, " +
                    std::to_string(touched_test) + " test clips touched; anomalous train frames " +
                    std::to_string(anomalous_train) + "; tainted split rejected: " +
                    (rejected && trial_rejected ? "yes" : "no")};
}

} // namespace

int main() {
    Benchmark bench;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"windowing oracle equivalence", windowing_oracle},
        {"canonical 6/2 split", canonical_split},
        {"loss decomposition identity", loss_decomposition},
        {"loss gradient check", loss_gradient},
        {"model shape and invariant suite", model_invariants},
        {"metric oracle equivalence", metric_oracle},
        {"synthetic end-to-end benchmark", [&] { return synthetic_benchmark(bench); }},
        {"determinism", [&] { return determinism(bench); }},
        {"protocol fidelity", [&] { return protocol(bench); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].first << ": "
                  << o.detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
