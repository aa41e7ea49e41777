#include "doctest.h"

#include "tempshift/config.hpp"
#include "tempshift/errors.hpp"

#include <filesystem>
#include <fstream>

using namespace tempshift;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({
        "dataset": {"source": "synthetic", "synthetic": {"seed": 7}},
        "training": {"seed": 1}
    })");
}

std::string error_of(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("defaults") {
    const ExperimentConfig c = parse_config(minimal());
    CHECK(c.window.input_len == 6);
    CHECK(c.window.shift == 2);
    CHECK(c.window.stride == 1);
    CHECK(c.model.family == Family::Cae3d);
    CHECK(c.model.height == 64);
    CHECK(c.model.width == 64);
    CHECK(c.model.channel_widths == std::vector<int>{16, 32, 64});
    CHECK(c.model.input_frames == 6);
    CHECK(c.training.batch_size == 16);
    CHECK(c.training.learning_rate == 1e-3);
    CHECK(c.training.loss_mode == LossMode::Full);
    CHECK(c.dataset.fps == 8.0);
    CHECK(c.sweep_pairs == std::vector<std::pair<int, int>>{{8, 0}, {6, 2}, {4, 4}, {4, 1}});
    CHECK(c.model.seed == c.training.seed);
}

TEST_CASE("every problem is reported at once") {
    json j = minimal();
    j["window"] = {{"input_len", 6}, {"shift", 7}};
    j["model"] = {{"family", "vit"}, {"frame_size", {60, 64}}};
    j["training"]["learning_rate"] = -1;
    j["training"]["epocs"] = 3;
    j["runtime"] = {{"device", "cuda"}};
    const std::string msg = error_of(j);
    CHECK(msg.find("window") != std::string::npos);
    CHECK(msg.find("unknown family 'vit'") != std::string::npos);
    CHECK(msg.find("learning_rate") != std::string::npos);
    CHECK(msg.find("epocs") != std::string::npos);
    CHECK(msg.find("cuda") != std::string::npos);
    CHECK(msg.find("frame_size") != std::string::npos);
    CHECK(msg.find("6 problems") != std::string::npos);
}

TEST_CASE("seeds must be explicit") {
    json j = minimal();
    j["training"].erase("seed");
    CHECK(error_of(j).find("training.seed") != std::string::npos);
    j = minimal();
    j["dataset"]["synthetic"].erase("seed");
    CHECK(error_of(j).find("seed") != std::string::npos);
}

TEST_CASE("type errors and window fit") {
    json j = minimal();
    j["window"] = {{"input_len", "six"}};
    CHECK(error_of(j).find("input_len") != std::string::npos);
    j = minimal();
    j["window"] = {{"input_len", 40}, {"shift", 30}};
    j["dataset"]["synthetic"]["clip_len"] = 64;
    CHECK(error_of(j).find("clip_len") != std::string::npos);
}

TEST_CASE("hash ignores output and runtime") {
    json j = minimal();
    const std::string base = parse_config(j).hash();
    j["output"] = {{"directory", "elsewhere"}};
    j["runtime"] = {{"workers", 3}};
    CHECK(parse_config(j).hash() == base);
    j["training"]["seed"] = 2;
    CHECK(parse_config(j).hash() != base);
}

TEST_CASE("resolved config round trips") {
    json j = minimal();
    j["loss"] = {{"mode", "pred-only"}, {"weights", {{"recon", 0.5}, {"pred", 0.5}}}};
    j["model"] = {{"family", "multimodal"}, {"fusion", "concat"}, {"frame_size", {32, 32}}};
    const ExperimentConfig c = parse_config(j);
    const ExperimentConfig back = parse_config(c.to_json());
    CHECK(back.hash() == c.hash());
    CHECK(back.model == c.model);
    CHECK(back.training.loss_mode == LossMode::PredOnly);
}

TEST_CASE("seed override touches training and model seeds only") {
    ExperimentConfig c = parse_config(minimal());
    apply_seed(c, 99);
    CHECK(c.training.seed == 99);
    CHECK(c.model.seed == 99);
    CHECK(c.dataset.synthetic.seed == 7);
}

TEST_CASE("files") {
    const auto path = std::filesystem::temp_directory_path() / "tempshift-test-config.json";
    std::ofstream(path) << "// comment\n" << minimal().dump();
    CHECK(load_config(path).training.seed == 1);
    std::ofstream(path) << "{ not json";
    CHECK_THROWS_AS(load_config(path), ConfigError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("shipped example configs are valid") {
    for (const auto& entry : std::filesystem::directory_iterator(TEMPSHIFT_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        INFO(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path()).validate());
    }
}
