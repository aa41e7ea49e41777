// Command-line runner: run, sweep, compare-losses, compare-fusion,
// generate-data, score. Exit codes: 0 ok, 2 config, 3 data, 4 training.

#include "tempshift/errors.hpp"
#include "tempshift/experiment.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <iostream>
#include <optional>

namespace {

using namespace tempshift;

constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kTrainingError = 4;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string device;
    std::optional<int> workers;
    std::string checkpoint;
    std::string manifest;
    bool quiet = false;
};

ExperimentConfig resolve(const Options& o) {
    ExperimentConfig c = load_config(o.config);
    if (o.seed) apply_seed(c, *o.seed);
    if (!o.out.empty()) c.output.directory = o.out;
    if (!o.device.empty()) c.device = o.device;
    if (o.workers) c.workers = *o.workers;
    c.validate();
    return c;
}

int dispatch(const std::string& command, const Options& o) {
    const ExperimentConfig c = resolve(o);
    const auto t0 = std::chrono::steady_clock::now();
    Progress progress;
    if (!o.quiet) {
        progress = [t0](const std::string& msg) {
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::clog << "[" << static_cast<long>(s) << "s] " << msg << std::endl;
        };
    }

    if (command == "generate-data") {
        if (c.dataset.source != "synthetic") {
            throw ConfigError("generate-data needs dataset.source = \"synthetic\"");
        }
        const DatasetSplit data = load_dataset(c);
        write_dataset(data, c.output.directory, c.dataset.fps);
        std::cout << "wrote " << data.train.size() << " train and " << data.test.size()
                  << " test clips to " << c.output.directory.string() << " (manifest.txt)\n";
        return 0;
    }

    Report report;
    if (command == "run") report = run(c, progress);
    else if (command == "sweep") report = sweep_windows(c, progress);
    else if (command == "compare-losses") report = compare_losses(c, progress);
    else if (command == "compare-fusion") report = compare_fusion(c, progress);
    else if (command == "score") {
        std::optional<std::filesystem::path> manifest;
        if (!o.manifest.empty()) manifest = o.manifest;
        report = score_checkpoint(c, o.checkpoint, manifest, progress);
    }
    std::cout << report.to_text();
    std::cout << "artifacts: " << c.output.directory.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal-shift video anomaly detection experiments"};
    app.require_subcommand(1);
    Options o;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"run", "Train and score one configuration"},
        {"sweep", "Train and score every (W, S) pair of the sweep"},
        {"compare-losses", "Reconstruction vs prediction vs temporal shift"},
        {"compare-fusion", "Concat / add / multiply fusion of two modalities"},
        {"generate-data", "Write the synthetic dataset as PNG frames with a manifest"},
        {"score", "Score a saved checkpoint against a dataset"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "Override training and model seeds");
        sub->add_option("--out", o.out, "Output directory (overrides output.directory)");
        sub->add_option("--device", o.device, "Compute device (cpu)");
        sub->add_option("--workers", o.workers, "Parallel scoring workers")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", o.quiet, "No progress messages");
        if (name == "score") {
            sub->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
            sub->add_option("--manifest", o.manifest, "Score this manifest instead of the config's data");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return dispatch(command, o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const MetricError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const TrainingError& e) {
        std::cerr << "training failure: " << e.what() << "\n";
        return kTrainingError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    }
}
