#include "tempshift/data.hpp"

#include "tempshift/errors.hpp"
#include "tempshift/hash.hpp"
#include "tempshift/random.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/videoio.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace tempshift {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Clip and split invariants

std::span<const float> VideoClip::frame(std::size_t t) const {
    return std::span<const float>(frames).subspan(t * frame_size(), frame_size());
}

std::size_t VideoClip::num_anomalous() const noexcept {
    if (!labels) return 0;
    return static_cast<std::size_t>(
        std::count_if(labels->begin(), labels->end(), [](std::uint8_t l) { return l != 0; }));
}

void VideoClip::validate() const {
    const std::string where = "clip '" + clip_id + "': ";
    if (height < 1 || width < 1) throw DataError(where + "empty frame size");
    if (frames.size() != length() * frame_size()) {
        throw DataError(where + std::to_string(frames.size()) + " pixels for " +
                        std::to_string(length()) + " frames of " + std::to_string(height) + "x" +
                        std::to_string(width));
    }
    for (float v : frames) {
        if (!(v >= 0.0f && v <= 1.0f)) throw DataError(where + "pixel value outside [0, 1]");
    }
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        if (timestamps[i] < timestamps[i - 1]) throw DataError(where + "timestamps decrease");
    }
    if (labels && labels->size() != length()) {
        throw DataError(where + std::to_string(labels->size()) + " labels for " +
                        std::to_string(length()) + " frames");
    }
}

void DatasetSplit::validate() const {
    std::set<std::pair<std::string, std::string>> train_ids;
    for (const auto& c : train) {
        c.validate();
        if (c.num_anomalous() > 0) {
            throw DataError("clip '" + c.clip_id + "': train split contains " +
                            std::to_string(c.num_anomalous()) + " anomalous frame(s)");
        }
        if (!train_ids.insert({c.clip_id, c.modality}).second) {
            throw DataError("clip '" + c.clip_id + "': duplicated in train split");
        }
    }
    std::set<std::pair<std::string, std::string>> test_ids;
    for (const auto& c : test) {
        c.validate();
        if (!c.labels) throw DataError("clip '" + c.clip_id + "': test clip without labels");
        if (train_ids.count({c.clip_id, c.modality})) {
            throw DataError("clip '" + c.clip_id + "': appears in both train and test splits");
        }
        if (!test_ids.insert({c.clip_id, c.modality}).second) {
            throw DataError("clip '" + c.clip_id + "': duplicated in test split");
        }
    }
}

std::vector<std::string> DatasetSplit::modalities() const {
    std::vector<std::string> out;
    auto note = [&](const VideoClip& c) {
        if (std::find(out.begin(), out.end(), c.modality) == out.end()) out.push_back(c.modality);
    };
    for (const auto& c : train) note(c);
    for (const auto& c : test) note(c);
    return out;
}

DatasetSplit DatasetSplit::select(const std::string& modality) const {
    DatasetSplit out;
    for (const auto& c : train) if (c.modality == modality) out.train.push_back(c);
    for (const auto& c : test) if (c.modality == modality) out.test.push_back(c);
    return out;
}

std::string DatasetSplit::content_hash() const {
    ContentHash h;
    auto add = [&](const char* split, const VideoClip& c) {
        h.update(split).update(c.clip_id).update(c.modality);
        h.update(static_cast<std::uint64_t>(c.height)).update(static_cast<std::uint64_t>(c.width));
        h.update(std::span<const float>(c.frames));
        if (c.labels) {
            h.update(std::as_bytes(std::span<const std::uint8_t>(*c.labels)));
        }
    };
    for (const auto& c : train) add("train", c);
    for (const auto& c : test) add("test", c);
    return h.hex();
}

// ---------------------------------------------------------------------------
// Preprocessing

std::vector<float> preprocess_frame(const RawImage& raw, int target_height, int target_width) {
    if (raw.channels != 1 && raw.channels != 3) {
        throw DataError("preprocess: unsupported channel count " + std::to_string(raw.channels));
    }
    if (raw.height < 1 || raw.width < 1 || target_height < 1 || target_width < 1) {
        throw DataError("preprocess: empty image");
    }
    const std::size_t px = static_cast<std::size_t>(raw.height) * raw.width;
    if (raw.data.size() != px * raw.channels) {
        throw DataError("preprocess: " + std::to_string(raw.data.size()) + " values for " +
                        std::to_string(raw.height) + "x" + std::to_string(raw.width) + "x" +
                        std::to_string(raw.channels));
    }
    double scale = 1.0;
    switch (raw.depth) {
    case PixelDepth::U8: scale = 1.0 / 255.0; break;
    case PixelDepth::U16: scale = 1.0 / 65535.0; break;
    case PixelDepth::F32: scale = 1.0; break;
    }

    std::vector<double> gray(px);
    for (std::size_t i = 0; i < px; ++i) {
        if (raw.channels == 1) {
            gray[i] = raw.data[i];
        } else {
            const float* p = &raw.data[i * 3];
            gray[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        }
    }

    // Bilinear with half-pixel centres.
    std::vector<float> out(static_cast<std::size_t>(target_height) * target_width);
    const double sy = static_cast<double>(raw.height) / target_height;
    const double sx = static_cast<double>(raw.width) / target_width;
    for (int y = 0; y < target_height; ++y) {
        const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
        const int y0 = std::min(static_cast<int>(fy), raw.height - 1);
        const int y1 = std::min(y0 + 1, raw.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < target_width; ++x) {
            const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
            const int x0 = std::min(static_cast<int>(fx), raw.width - 1);
            const int x1 = std::min(x0 + 1, raw.width - 1);
            const double wx = fx - x0;
            const auto at = [&](int yy, int xx) {
                return gray[static_cast<std::size_t>(yy) * raw.width + xx];
            };
            const double v = (1 - wy) * ((1 - wx) * at(y0, x0) + wx * at(y0, x1)) +
                             wy * ((1 - wx) * at(y1, x0) + wx * at(y1, x1));
            out[static_cast<std::size_t>(y) * target_width + x] =
                static_cast<float>(std::clamp(v * scale, 0.0, 1.0));
        }
    }
    return out;
}

std::vector<std::size_t> resample_fps(std::span<const double> timestamps, double native_fps,
                                      double target_fps) {
    if (timestamps.empty()) throw DataError("resample: empty clip");
    if (!(native_fps > 0.0)) throw DataError("resample: native fps must be positive");
    if (!(target_fps > 0.0)) throw ConfigError("resample: target fps must be positive");
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        if (timestamps[i] < timestamps[i - 1]) throw DataError("resample: timestamps decrease");
    }
    constexpr double eps = 1e-9;
    const double t0 = timestamps.front();
    const double end = timestamps.back() + 1.0 / native_fps;
    std::vector<std::size_t> out;
    std::size_t src = 0;
    for (std::size_t k = 0;; ++k) {
        const double tick = t0 + static_cast<double>(k) / target_fps;
        if (tick >= end - eps) break;
        while (src + 1 < timestamps.size() && timestamps[src + 1] <= tick + eps) ++src;
        out.push_back(src);
    }
    return out;
}

VideoClip apply_resample(const VideoClip& clip, std::span<const std::size_t> indices,
                         double target_fps) {
    VideoClip out;
    out.clip_id = clip.clip_id;
    out.modality = clip.modality;
    out.height = clip.height;
    out.width = clip.width;
    out.frames.reserve(indices.size() * clip.frame_size());
    if (clip.labels) out.labels.emplace();
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        if (i >= clip.length()) {
            throw DataError("clip '" + clip.clip_id + "': resample index out of range");
        }
        const auto f = clip.frame(i);
        out.frames.insert(out.frames.end(), f.begin(), f.end());
        out.timestamps.push_back(static_cast<double>(k) / target_fps);
        if (clip.labels) out.labels->push_back((*clip.labels)[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SyntheticOptions::validate() const {
    std::vector<std::string> errors;
    if (n_train_clips < 1) errors.push_back("dataset.synthetic.train_clips must be >= 1");
    if (n_test_clips < 1) errors.push_back("dataset.synthetic.test_clips must be >= 1");
    if (clip_len < 32) errors.push_back("dataset.synthetic.clip_len must be >= 32");
    if (!(anomaly_rate > 0.0 && anomaly_rate <= 0.5)) {
        errors.push_back("dataset.synthetic.anomaly_rate must be in (0, 0.5]");
    }
    if (height < 16 || width < 16) errors.push_back("dataset.synthetic frame size must be >= 16");
    if (!(fps > 0.0)) errors.push_back("dataset.synthetic.fps must be positive");
    if (!errors.empty()) {
        std::string msg;
        for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
        throw ConfigError(msg);
    }
}

namespace {

struct Segment {
    int start = 0;
    int length = 0;
};

constexpr double kBackground = 0.08;
constexpr double kAmplitude = 0.82;

// Geometry in units of a 64-pixel frame, scaled to the requested size.
struct Scene {
    double scale_x = 1.0;
    double scale_y = 1.0;
    double standing_sx = 3.5;
    double standing_sy = 8.0;
    double floor_y = 53.0;
    double min_y = 20.0;
    double max_y = 34.0;
    double min_x = 8.0;
    double max_x = 56.0;
};

void render(const Scene& scene, double cx, double cy, double sx, double sy, int height, int width,
            float* out) {
    for (int y = 0; y < height; ++y) {
        const double dy = ((y + 0.5) / scene.scale_y - cy) / sy;
        for (int x = 0; x < width; ++x) {
            const double dx = ((x + 0.5) / scene.scale_x - cx) / sx;
            const double v = kBackground + kAmplitude * std::exp(-0.5 * (dx * dx + dy * dy));
            out[static_cast<std::size_t>(y) * width + x] =
                static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
}

VideoClip synth_clip(const SyntheticOptions& opt, const std::string& clip_id,
                     const std::vector<Segment>& anomalies, bool labelled) {
    Rng rng(derive_seed(opt.seed, clip_id));
    Scene scene;
    scene.scale_x = opt.width / 64.0;
    scene.scale_y = opt.height / 64.0;

    VideoClip clip;
    clip.clip_id = clip_id;
    clip.modality = kIntensityModality;
    clip.height = opt.height;
    clip.width = opt.width;
    const auto T = static_cast<std::size_t>(opt.clip_len);
    clip.frames.resize(T * clip.frame_size());
    clip.timestamps.resize(T);
    if (labelled) clip.labels.emplace(T, 0);

    double x = rng.uniform(scene.min_x + 6, scene.max_x - 6);
    double y = rng.uniform(scene.min_y, scene.max_y);
    double vx = 0.0;
    double vy = 0.0;
    double jitter_x = 0.0;
    double jitter_y = 0.0;

    std::vector<int> segment_at(T, -1);
    for (std::size_t s = 0; s < anomalies.size(); ++s) {
        for (int k = 0; k < anomalies[s].length; ++k) {
            segment_at[static_cast<std::size_t>(anomalies[s].start + k)] = static_cast<int>(s);
        }
    }

    for (std::size_t t = 0; t < T; ++t) {
        clip.timestamps[t] = static_cast<double>(t) / opt.fps;
        double cy = y;
        double sx = scene.standing_sx * (1.0 + jitter_x);
        double sy = scene.standing_sy * (1.0 + jitter_y);
        const int seg = segment_at[t];
        if (seg >= 0) {
            // Fast drop with an upright-to-lying flip, then back up.
            const Segment& a = anomalies[static_cast<std::size_t>(seg)];
            const int k = static_cast<int>(t) - a.start;
            const int half = a.length / 2;
            const double phase = k < half ? static_cast<double>(k + 1) / half
                                          : static_cast<double>(a.length - k - 1) /
                                                std::max(1, a.length - half);
            cy = y + phase * (scene.floor_y - y);
            sx = scene.standing_sx + phase * (scene.standing_sy - scene.standing_sx);
            sy = scene.standing_sy + phase * (scene.standing_sx - scene.standing_sy);
            (*clip.labels)[t] = 1;
        } else {
            // Slow Brownian drift with damping, bounded speed, reflecting walls.
            vx = 0.85 * vx + 0.25 * rng.normal();
            vy = 0.85 * vy + 0.12 * rng.normal();
            const double speed = std::hypot(vx, vy);
            if (speed > 0.9) {
                vx *= 0.9 / speed;
                vy *= 0.9 / speed;
            }
            x += vx;
            y += vy;
            if (x < scene.min_x) { x = 2 * scene.min_x - x; vx = -vx; }
            if (x > scene.max_x) { x = 2 * scene.max_x - x; vx = -vx; }
            if (y < scene.min_y) { y = 2 * scene.min_y - y; vy = -vy; }
            if (y > scene.max_y) { y = 2 * scene.max_y - y; vy = -vy; }
            jitter_x = 0.8 * jitter_x + 0.02 * rng.normal();
            jitter_y = 0.8 * jitter_y + 0.02 * rng.normal();
            cy = y;
            sx = scene.standing_sx * (1.0 + jitter_x);
            sy = scene.standing_sy * (1.0 + jitter_y);
        }
        render(scene, x, cy, sx, sy, opt.height, opt.width, clip.frames.data() + t * clip.frame_size());
    }
    return clip;
}

std::string clip_name(const char* split, int i) {
    std::ostringstream os;
    os << split << "-" << std::setw(3) << std::setfill('0') << i;
    return os.str();
}

VideoClip invert(const VideoClip& c) {
    VideoClip out = c;
    out.modality = kInvertedModality;
    for (auto& v : out.frames) v = 1.0f - v;
    return out;
}

} // namespace

DatasetSplit generate_synthetic(const SyntheticOptions& opt) {
    opt.validate();
    const int T = opt.clip_len;
    constexpr int kMargin = 8;  // keeps segments off clip edges and apart
    constexpr int kMinLen = 8;
    constexpr int kMaxLen = 16;

    // Segment layout over the whole test set.
    std::vector<std::vector<Segment>> layout(static_cast<std::size_t>(opt.n_test_clips));
    Rng layout_rng(derive_seed(opt.seed, "anomaly-layout"));
    const long target = std::max(
        1L, std::lround(opt.anomaly_rate * static_cast<double>(T) * opt.n_test_clips));
    long placed = 0;
    int failures = 0;
    while (placed < target && failures < 1000) {
        const auto c = static_cast<std::size_t>(layout_rng.below(layout.size()));
        const int len = std::clamp(layout_rng.between(kMinLen, kMaxLen), kMinLen,
                                   static_cast<int>(std::max<long>(kMinLen, target - placed)));
        const int lo = kMargin;
        const int hi = T - len - kMargin;
        if (hi < lo) {
            ++failures;
            continue;
        }
        const int start = layout_rng.between(lo, hi);
        bool clash = false;
        for (const auto& s : layout[c]) {
            if (start < s.start + s.length + kMargin && s.start < start + len + kMargin) {
                clash = true;
                break;
            }
        }
        if (clash) {
            ++failures;
            continue;
        }
        layout[c].push_back({start, len});
        placed += len;
    }
    if (placed == 0) {
        throw ConfigError("dataset.synthetic: could not place any anomalous segment");
    }

    DatasetSplit split;
    for (int i = 0; i < opt.n_train_clips; ++i) {
        split.train.push_back(synth_clip(opt, clip_name("train", i), {}, false));
    }
    for (int i = 0; i < opt.n_test_clips; ++i) {
        split.test.push_back(
            synth_clip(opt, clip_name("test", i), layout[static_cast<std::size_t>(i)], true));
    }
    if (opt.multimodal) {
        const std::size_t n_train = split.train.size();
        const std::size_t n_test = split.test.size();
        for (std::size_t i = 0; i < n_train; ++i) split.train.push_back(invert(split.train[i]));
        for (std::size_t i = 0; i < n_test; ++i) split.test.push_back(invert(split.test[i]));
    }
    return split;
}

// ---------------------------------------------------------------------------
// Manifest and on-disk loading

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
    std::ifstream is(manifest);
    if (!is) throw DataError("manifest: cannot open " + manifest.string());
    const fs::path base = manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
    std::vector<ManifestEntry> out;
    std::string line;
    bool header_seen = false;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> cols;
        for (std::string tok; ls >> tok;) cols.push_back(tok);
        if (cols.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            const std::vector<std::string> expected{"clip_id", "path", "modality",
                                                    "split", "native_fps", "label_path"};
            if (cols != expected) {
                throw DataError("manifest " + manifest.string() +
                                ": header must be 'clip_id path modality split native_fps label_path'");
            }
            continue;
        }
        const std::string where = "manifest " + manifest.string() + ":" + std::to_string(line_no);
        if (cols.size() != 6) throw DataError(where + ": expected 6 columns");
        ManifestEntry e;
        e.clip_id = cols[0];
        e.path = fs::path(cols[1]).is_absolute() ? fs::path(cols[1]) : base / cols[1];
        e.modality = cols[2];
        e.split = cols[3];
        if (e.split != "train" && e.split != "test") {
            throw DataError(where + ": split must be train or test, got '" + e.split + "'");
        }
        try {
            e.native_fps = std::stod(cols[4]);
        } catch (const std::exception&) {
            throw DataError(where + ": bad native_fps '" + cols[4] + "'");
        }
        if (cols[5] != "-") {
            e.label_path = fs::path(cols[5]).is_absolute() ? fs::path(cols[5]) : base / cols[5];
        }
        out.push_back(std::move(e));
    }
    return out;
}

void write_manifest(const fs::path& manifest, std::span<const ManifestEntry> entries) {
    std::ofstream os(manifest);
    if (!os) throw DataError("manifest: cannot write " + manifest.string());
    const fs::path base = manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
    auto rel = [&](const fs::path& p) { return fs::relative(p, base).generic_string(); };
    os << "clip_id path modality split native_fps label_path\n";
    for (const auto& e : entries) {
        os << e.clip_id << " " << rel(e.path) << " " << e.modality << " " << e.split << " "
           << e.native_fps << " " << (e.label_path ? rel(*e.label_path) : "-") << "\n";
    }
}

namespace {

RawImage to_raw(const cv::Mat& mat, const std::string& where) {
    RawImage raw;
    raw.height = mat.rows;
    raw.width = mat.cols;
    int channels = mat.channels();
    switch (mat.depth()) {
    case CV_8U: raw.depth = PixelDepth::U8; break;
    case CV_16U: raw.depth = PixelDepth::U16; break;
    case CV_32F: raw.depth = PixelDepth::F32; break;
    default: throw DataError(where + ": unsupported pixel depth");
    }
    // Alpha is dropped; OpenCV stores colour as B, G, R.
    const int keep = channels == 4 ? 3 : channels;
    raw.channels = keep;
    cv::Mat f;
    mat.convertTo(f, CV_32F);
    raw.data.resize(static_cast<std::size_t>(raw.height) * raw.width * keep);
    for (int y = 0; y < raw.height; ++y) {
        const float* row = f.ptr<float>(y);
        for (int x = 0; x < raw.width; ++x) {
            float* dst = &raw.data[(static_cast<std::size_t>(y) * raw.width + x) * keep];
            const float* src = row + static_cast<std::size_t>(x) * channels;
            if (keep == 3) {
                dst[0] = src[2];
                dst[1] = src[1];
                dst[2] = src[0];
            } else {
                for (int c = 0; c < keep; ++c) dst[c] = src[c];
            }
        }
    }
    return raw;
}

bool is_raster(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    static const std::set<std::string> kExt{".png", ".pgm", ".ppm", ".pnm", ".bmp", ".tif", ".tiff"};
    return kExt.count(ext) > 0;
}

VideoClip load_clip(const ManifestEntry& e, const LoadOptions& opt) {
    const std::string where = "clip '" + e.clip_id + "'";
    VideoClip clip;
    clip.clip_id = e.clip_id;
    clip.modality = e.modality;
    clip.height = opt.height;
    clip.width = opt.width;

    auto push = [&](const cv::Mat& mat) {
        const auto f = preprocess_frame(to_raw(mat, where), opt.height, opt.width);
        clip.frames.insert(clip.frames.end(), f.begin(), f.end());
        clip.timestamps.push_back(static_cast<double>(clip.timestamps.size()) / e.native_fps);
    };

    if (fs::is_directory(e.path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(e.path)) {
            if (entry.is_regular_file() && is_raster(entry.path())) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
        if (files.empty()) throw DataError(where + ": no frames in " + e.path.string());
        for (const auto& f : files) {
            const cv::Mat mat = cv::imread(f.string(), cv::IMREAD_UNCHANGED);
            if (mat.empty()) throw DataError(where + ": cannot decode " + f.string());
            push(mat);
        }
    } else if (fs::is_regular_file(e.path)) {
        cv::VideoCapture cap(e.path.string());
        if (!cap.isOpened()) throw DataError(where + ": cannot open video " + e.path.string());
        for (cv::Mat mat; cap.read(mat);) push(mat);
        if (clip.timestamps.empty()) throw DataError(where + ": video has no frames");
    } else {
        throw DataError(where + ": missing " + e.path.string());
    }

    if (e.label_path) {
        std::ifstream ls(*e.label_path);
        if (!ls) throw DataError(where + ": cannot open label file " + e.label_path->string());
        std::vector<std::uint8_t> labels;
        for (std::string tok; ls >> tok;) {
            if (tok != "0" && tok != "1") {
                throw DataError(where + ": label file holds '" + tok + "', expected 0 or 1");
            }
            labels.push_back(tok == "1" ? 1 : 0);
        }
        if (labels.size() != clip.length()) {
            throw DataError(where + ": " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(clip.length()) + " frames");
        }
        clip.labels = std::move(labels);
    }

    const auto idx = resample_fps(clip.timestamps, e.native_fps, opt.target_fps);
    VideoClip out = apply_resample(clip, idx, opt.target_fps);
    if (out.labels && out.labels->size() != out.length()) {
        throw DataError(where + ": label/frame count mismatch after resampling");
    }
    return out;
}

} // namespace

DatasetSplit load_directory(const fs::path& manifest, const LoadOptions& options) {
    const auto entries = read_manifest(manifest);
    DatasetSplit split;
    for (const auto& e : entries) {
        VideoClip clip = load_clip(e, options);
        if (e.split == "train") {
            if (clip.num_anomalous() > 0) {
                throw DataError("clip '" + e.clip_id + "': train split contains " +
                                std::to_string(clip.num_anomalous()) + " anomalous frame(s)");
            }
            split.train.push_back(std::move(clip));
        } else {
            if (!clip.labels) throw DataError("clip '" + e.clip_id + "': test clip needs a label file");
            split.test.push_back(std::move(clip));
        }
    }
    split.validate();
    return split;
}

void write_dataset(const DatasetSplit& split, const fs::path& root, double fps) {
    fs::create_directories(root);
    std::vector<ManifestEntry> entries;
    auto write_clip = [&](const VideoClip& c, const std::string& which) {
        const fs::path dir = root / which / c.modality / c.clip_id;
        fs::create_directories(dir);
        for (std::size_t t = 0; t < c.length(); ++t) {
            cv::Mat img(c.height, c.width, CV_16UC1);
            const auto f = c.frame(t);
            for (int y = 0; y < c.height; ++y) {
                auto* row = img.ptr<std::uint16_t>(y);
                for (int x = 0; x < c.width; ++x) {
                    row[x] = static_cast<std::uint16_t>(
                        std::lround(f[static_cast<std::size_t>(y) * c.width + x] * 65535.0f));
                }
            }
            std::ostringstream name;
            name << std::setw(6) << std::setfill('0') << t << ".png";
            if (!cv::imwrite((dir / name.str()).string(), img)) {
                throw DataError("clip '" + c.clip_id + "': cannot write frame " + name.str());
            }
        }
        ManifestEntry e;
        e.clip_id = c.clip_id;
        e.path = dir;
        e.modality = c.modality;
        e.split = which;
        e.native_fps = fps;
        if (c.labels) {
            const fs::path lp = root / which / c.modality / (c.clip_id + ".labels");
            std::ofstream ls(lp);
            for (auto l : *c.labels) ls << static_cast<int>(l) << "\n";
            e.label_path = lp;
        }
        entries.push_back(std::move(e));
    };
    for (const auto& c : split.train) write_clip(c, "train");
    for (const auto& c : split.test) write_clip(c, "test");
    write_manifest(root / "manifest.txt", entries);
}

std::vector<std::pair<const VideoClip*, const VideoClip*>>
pair_modalities(std::span<const VideoClip> a, std::span<const VideoClip> b) {
    std::map<std::string, const VideoClip*> by_id;
    for (const auto& c : b) by_id[c.clip_id] = &c;
    if (a.size() != b.size()) {
        throw DataError("modalities: " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + " clips");
    }
    std::vector<std::pair<const VideoClip*, const VideoClip*>> out;
    for (const auto& ca : a) {
        const auto it = by_id.find(ca.clip_id);
        if (it == by_id.end()) {
            throw DataError("clip '" + ca.clip_id + "': no counterpart in modality '" +
                            (b.empty() ? std::string("?") : b.front().modality) + "'");
        }
        const VideoClip& cb = *it->second;
        if (ca.length() != cb.length() || ca.height != cb.height || ca.width != cb.width) {
            throw DataError("clip '" + ca.clip_id + "': modalities differ in length or frame size");
        }
        if (ca.timestamps != cb.timestamps) {
            throw DataError("clip '" + ca.clip_id + "': modalities have different timestamps");
        }
        if (ca.labels != cb.labels) {
            throw DataError("clip '" + ca.clip_id + "': modalities have different labels");
        }
        out.emplace_back(&ca, &cb);
    }
    return out;
}

} // namespace tempshift
