#include "doctest.h"

#include "tempshift/checkpoint.hpp"
#include "tempshift/errors.hpp"
#include "tempshift/random.hpp"

#include <filesystem>
#include <fstream>

using namespace tempshift;
namespace fs = std::filesystem;

TEST_CASE("checkpoint round trip") {
    const fs::path path = fs::temp_directory_path() / "tempshift-test.ckpt";
    for (Family f : {Family::Cae3d, Family::AttentionUnet, Family::Multimodal}) {
        ModelSpec s;
        s.family = f;
        s.input_frames = 4;
        s.height = s.width = 16;
        s.channel_widths = {3, 4, 5};
        s.fusion = Fusion::Concat;
        s.seed = 8;
        const auto m = build_model(s);
        CheckpointMeta meta{8, "abc123", {{"shift", "2"}, {"loss_mode", "full"}}};
        save_checkpoint(path, *m, meta);

        const LoadedCheckpoint back = load_checkpoint(path, s);
        CHECK(back.model->spec() == s);
        CHECK(back.meta.seed == 8);
        CHECK(back.meta.config_hash == "abc123");
        CHECK(back.meta.extra == meta.extra);
        REQUIRE(back.model->parameters().size() == m->parameters().size());
        for (std::size_t k = 0; k < m->parameters().size(); ++k) {
            const auto& a = m->parameters()[k].value;
            const auto& b = back.model->parameters()[k].value;
            REQUIRE(a.shape() == b.shape());
            for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
        }

        ModelSpec other = s;
        other.input_frames = 6;
        CHECK_THROWS_AS(load_checkpoint(path, other), DataError);

        // Fusion is irrelevant to single-stream models.
        other = s;
        other.fusion = Fusion::Multiply;
        if (f == Family::Multimodal) CHECK_THROWS_AS(load_checkpoint(path, other), DataError);
        else CHECK_NOTHROW(load_checkpoint(path, other));
    }
    fs::remove(path);
}

TEST_CASE("damaged checkpoints fail loudly") {
    const fs::path path = fs::temp_directory_path() / "tempshift-test-bad.ckpt";
    ModelSpec s;
    s.height = s.width = 16;
    s.channel_widths = {2, 2, 2};
    save_checkpoint(path, *build_model(s), {});
    const auto full = fs::file_size(path);
    fs::resize_file(path, full - 10);
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
    std::ofstream(path) << "not a checkpoint\n";
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
    fs::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
}
