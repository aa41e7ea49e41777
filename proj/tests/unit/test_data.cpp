#include "doctest.h"

#include "tempshift/data.hpp"
#include "tempshift/errors.hpp"
#include "tempshift/random.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace tempshift;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("tempshift-test-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

SyntheticOptions small_options(std::uint64_t seed) {
    SyntheticOptions o;
    o.seed = seed;
    o.n_train_clips = 2;
    o.n_test_clips = 2;
    o.clip_len = 48;
    o.height = 16;
    o.width = 16;
    o.anomaly_rate = 0.15;
    return o;
}

double mean_abs_diff(const VideoClip& c, std::size_t t) {
    const auto a = c.frame(t - 1);
    const auto b = c.frame(t);
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

} // namespace

TEST_CASE("preprocessing normalises and converts to luminance") {
    RawImage black{8, 8, 1, PixelDepth::U8, std::vector<float>(64, 0.f)};
    for (float v : preprocess_frame(black, 4, 4)) CHECK(v == 0.f);

    RawImage white{128, 128, 1, PixelDepth::U8, std::vector<float>(128 * 128, 255.f)};
    const auto w = preprocess_frame(white, 64, 64);
    CHECK(w.size() == 64 * 64);
    for (float v : w) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));

    RawImage gray{10, 12, 3, PixelDepth::U8, std::vector<float>(10 * 12 * 3, 128.f)};
    for (float v : preprocess_frame(gray, 64, 64)) {
        CHECK(v == doctest::Approx(128.0 / 255.0).epsilon(1e-6));
    }
    CHECK(128.0 / 255.0 == doctest::Approx(0.502).epsilon(1e-3));

    RawImage deep{2, 2, 1, PixelDepth::U16, std::vector<float>(4, 65535.f)};
    for (float v : preprocess_frame(deep, 2, 2)) CHECK(v == doctest::Approx(1.0));

    RawImage bad{2, 2, 2, PixelDepth::U8, std::vector<float>(8, 0.f)};
    CHECK_THROWS_AS(preprocess_frame(bad, 2, 2), DataError);
}

TEST_CASE("zero-order-hold resampling") {
    auto stamps = [](std::size_t n, double fps) {
        std::vector<double> t;
        for (std::size_t i = 0; i < n; ++i) t.push_back(static_cast<double>(i) / fps);
        return t;
    };
    const auto same = resample_fps(stamps(20, 8), 8, 8);
    REQUIRE(same.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(same[i] == i);

    const auto half = resample_fps(stamps(100, 16), 16, 8);
    REQUIRE(half.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) CHECK(half[i] == 2 * i);

    CHECK(resample_fps(stamps(3, 4), 4, 8) == std::vector<std::size_t>{0, 0, 1, 1, 2, 2});

    const std::vector<double> backwards{0.0, 0.5, 0.25};
    CHECK_THROWS_AS(resample_fps(backwards, 8, 8), DataError);
}

TEST_CASE("resampled labels follow the index list") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        VideoClip c;
        c.clip_id = "c";
        c.modality = "intensity";
        c.height = c.width = 2;
        const auto n = static_cast<std::size_t>(rng.between(1, 60));
        const double fps = rng.between(2, 30);
        std::vector<std::uint8_t> labels;
        for (std::size_t i = 0; i < n; ++i) {
            c.timestamps.push_back(static_cast<double>(i) / fps);
            labels.push_back(rng.uniform() < 0.3);
            for (int k = 0; k < 4; ++k) c.frames.push_back(static_cast<float>(i) / n);
        }
        c.labels = labels;
        const auto idx = resample_fps(c.timestamps, fps, 8);
        const VideoClip r = apply_resample(c, idx, 8);
        REQUIRE(r.length() == idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            CHECK((*r.labels)[k] == labels[idx[k]]);
            CHECK(r.frame(k)[0] == c.frame(idx[k])[0]);
        }
        r.validate();
    }
}

TEST_CASE("synthetic generator is deterministic and in range") {
    SyntheticOptions o;
    o.seed = 42;
    o.n_train_clips = 2;
    o.n_test_clips = 10;
    o.clip_len = 256;
    o.height = o.width = 16;
    const DatasetSplit a = generate_synthetic(o);
    const DatasetSplit b = generate_synthetic(o);
    CHECK(a.content_hash() == b.content_hash());
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.test.size(); ++i) {
        CHECK(a.test[i].frames == b.test[i].frames);
        CHECK(a.test[i].labels == b.test[i].labels);
    }
    a.validate();

    std::size_t anomalous = 0, total = 0;
    for (const auto& c : a.test) {
        anomalous += c.num_anomalous();
        total += c.length();
        for (float v : c.frames) REQUIRE((v >= 0.f && v <= 1.f));
    }
    const double frac = static_cast<double>(anomalous) / total;
    CHECK(frac >= 0.03);
    CHECK(frac <= 0.08);
    for (const auto& c : a.train) CHECK(c.num_anomalous() == 0);

    o.seed = 43;
    CHECK(generate_synthetic(o).content_hash() != a.content_hash());
}

TEST_CASE("anomalous segments move faster than normal motion") {
    SyntheticOptions o = small_options(9);
    o.n_test_clips = 6;
    o.clip_len = 128;
    o.anomaly_rate = 0.1;
    for (const auto& c : generate_synthetic(o).test) {
        double fast = 0, slow = 0;
        std::size_t nf = 0, ns = 0;
        for (std::size_t t = 1; t < c.length(); ++t) {
            const bool inside = (*c.labels)[t] && (*c.labels)[t - 1];
            const bool outside = !(*c.labels)[t] && !(*c.labels)[t - 1];
            if (inside) {
                fast += mean_abs_diff(c, t);
                ++nf;
            } else if (outside) {
                slow += mean_abs_diff(c, t);
                ++ns;
            }
        }
        if (nf == 0) continue;
        CHECK(fast / nf > slow / ns);
    }
}

TEST_CASE("multimodal synthetic clips are aligned") {
    SyntheticOptions o = small_options(5);
    o.multimodal = true;
    const DatasetSplit d = generate_synthetic(o);
    CHECK(d.modalities() == std::vector<std::string>{kIntensityModality, kInvertedModality});
    const DatasetSplit a = d.select(kIntensityModality);
    const DatasetSplit b = d.select(kInvertedModality);
    const auto pairs = pair_modalities(a.test, b.test);
    REQUIRE(pairs.size() == a.test.size());
    for (const auto& [x, y] : pairs) {
        CHECK(x->labels == y->labels);
        CHECK(x->timestamps == y->timestamps);
    }
    VideoClip shifted = b.test[0];
    (*shifted.labels)[0] = !(*shifted.labels)[0];
    std::vector<VideoClip> bad{shifted};
    bad.insert(bad.end(), b.test.begin() + 1, b.test.end());
    CHECK_THROWS_AS(pair_modalities(a.test, bad), DataError);
}

TEST_CASE("synthetic options are validated") {
    SyntheticOptions o = small_options(1);
    o.anomaly_rate = 0.7;
    CHECK_THROWS_AS(generate_synthetic(o), ConfigError);
    o = small_options(1);
    o.clip_len = 16;
    CHECK_THROWS_AS(generate_synthetic(o), ConfigError);
}

TEST_CASE("split invariants") {
    DatasetSplit d = generate_synthetic(small_options(2));
    d.validate();
    DatasetSplit leaky = d;
    leaky.train.push_back(d.test[0]);
    CHECK_THROWS_AS(leaky.validate(), DataError);
    DatasetSplit unlabeled = d;
    unlabeled.test[0].labels.reset();
    CHECK_THROWS_AS(unlabeled.validate(), DataError);
    DatasetSplit bright = d;
    bright.train[0].frames[0] = 1.5f;
    CHECK_THROWS_AS(bright.validate(), DataError);
}

TEST_CASE("directory round trip through a manifest") {
    const fs::path root = scratch("roundtrip");
    const DatasetSplit d = generate_synthetic(small_options(4));
    write_dataset(d, root);
    const DatasetSplit back = load_directory(root / "manifest.txt", {16, 16, 8.0});
    REQUIRE(back.train.size() == d.train.size());
    REQUIRE(back.test.size() == d.test.size());
    for (std::size_t i = 0; i < d.test.size(); ++i) {
        CHECK(back.test[i].clip_id == d.test[i].clip_id);
        CHECK(back.test[i].labels == d.test[i].labels);
        REQUIRE(back.test[i].frames.size() == d.test[i].frames.size());
        for (std::size_t k = 0; k < d.test[i].frames.size(); ++k) {
            REQUIRE(back.test[i].frames[k] == doctest::Approx(d.test[i].frames[k]).epsilon(1e-4));
        }
    }
    fs::remove_all(root);
}

TEST_CASE("16 fps clip on disk is resampled to 8 fps with its labels") {
    const fs::path root = scratch("fps");
    SyntheticOptions o = small_options(6);
    o.clip_len = 100;
    const DatasetSplit d = generate_synthetic(o);
    write_dataset(d, root, 16.0);
    const DatasetSplit back = load_directory(root / "manifest.txt", {16, 16, 8.0});
    for (std::size_t i = 0; i < d.test.size(); ++i) {
        REQUIRE(back.test[i].length() == 50);
        for (std::size_t k = 0; k < 50; ++k) CHECK((*back.test[i].labels)[k] == (*d.test[i].labels)[2 * k]);
    }
    fs::remove_all(root);
}

TEST_CASE("manifest errors") {
    const fs::path root = scratch("manifest");
    const DatasetSplit d = generate_synthetic(small_options(7));
    write_dataset(d, root);
    auto entries = read_manifest(root / "manifest.txt");
    REQUIRE(entries.size() == 4);

    SUBCASE("train clip with an anomalous label") {
        const fs::path lp = root / "bad.labels";
        std::ofstream ls(lp);
        for (std::size_t i = 0; i < d.train[0].length(); ++i) ls << (i == 10 ? 1 : 0) << "\n";
        ls.close();
        entries[0].label_path = lp;
        write_manifest(root / "manifest.txt", entries);
        CHECK_THROWS_WITH_AS(load_directory(root / "manifest.txt", {16, 16, 8.0}),
                             doctest::Contains("anomalous"), DataError);
    }
    SUBCASE("test clip without labels") {
        entries[3].label_path.reset();
        write_manifest(root / "manifest.txt", entries);
        CHECK_THROWS_AS(load_directory(root / "manifest.txt", {16, 16, 8.0}), DataError);
    }
    SUBCASE("missing frames") {
        entries[1].path = root / "nowhere";
        write_manifest(root / "manifest.txt", entries);
        CHECK_THROWS_AS(load_directory(root / "manifest.txt", {16, 16, 8.0}), DataError);
    }
    SUBCASE("malformed lines") {
        std::ofstream(root / "m2.txt") << "clip_id path modality split native_fps label_path\n"
                                       << "a b c validation 8 -\n";
        CHECK_THROWS_AS(read_manifest(root / "m2.txt"), DataError);
        std::ofstream(root / "m3.txt") << "id path\n";
        CHECK_THROWS_AS(read_manifest(root / "m3.txt"), DataError);
        CHECK_THROWS_AS(read_manifest(root / "absent.txt"), DataError);
    }
    fs::remove_all(root);
}
