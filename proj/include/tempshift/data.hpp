#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tempshift {

/// A grayscale clip, frames stored frame-major (T x H x W) in [0, 1].
struct VideoClip {
    std::string clip_id;
    std::string modality;
    int height = 0;
    int width = 0;
    std::vector<float> frames;
    std::vector<double> timestamps;
    std::optional<std::vector<std::uint8_t>> labels; // 1 = anomalous frame

    std::size_t length() const noexcept { return timestamps.size(); }
    std::size_t frame_size() const noexcept { return static_cast<std::size_t>(height) * width; }
    std::span<const float> frame(std::size_t t) const;
    std::size_t num_anomalous() const noexcept;

    /// Throws DataError naming the clip on any violated invariant.
    void validate() const;
};

struct DatasetSplit {
    std::vector<VideoClip> train;
    std::vector<VideoClip> test;

    /// Clip invariants, disjoint splits, no anomalous frame in train,
    /// labels on every test clip.
    void validate() const;

    std::vector<std::string> modalities() const;
    /// Clips of one modality, order preserved.
    DatasetSplit select(const std::string& modality) const;
    /// Fingerprint over ids, modalities, pixels and labels.
    std::string content_hash() const;
};

enum class PixelDepth { U8, U16, F32 };

/// Raw interleaved image as decoded from disk, channel order R, G, B.
struct RawImage {
    int height = 0;
    int width = 0;
    int channels = 1;
    PixelDepth depth = PixelDepth::U8;
    std::vector<float> data; // native range: [0,255], [0,65535] or [0,1]
};

/// Luminance for 3 channels, bilinear resize, linear rescale of the native range to [0, 1].
std::vector<float> preprocess_frame(const RawImage& raw, int target_height, int target_width);

/// Zero-order hold: for each output tick k / target_fps, the last source frame
/// whose timestamp is not after the tick. Ticks cover [t0, t_last + 1 / native_fps).
std::vector<std::size_t> resample_fps(std::span<const double> timestamps, double native_fps,
                                      double target_fps = 8.0);

/// Reorders frames, timestamps and labels of `clip` by `indices`; timestamps
/// become k / target_fps.
VideoClip apply_resample(const VideoClip& clip, std::span<const std::size_t> indices,
                         double target_fps);

struct SyntheticOptions {
    std::uint64_t seed = 0;
    int n_train_clips = 8;
    int n_test_clips = 10;
    int clip_len = 128;
    double anomaly_rate = 0.05;
    int height = 64;
    int width = 64;
    double fps = 8.0;
    /// Also emit an inverted-contrast modality with identical labels.
    bool multimodal = false;

    void validate() const;
};

inline constexpr const char* kIntensityModality = "intensity";
inline constexpr const char* kInvertedModality = "inverted";

/// A bright blob drifting slowly on a dark background; test clips contain
/// labelled segments (8-16 frames) where it drops fast to the floor,
/// flips from upright to lying, and gets back up.
DatasetSplit generate_synthetic(const SyntheticOptions& options);

struct ManifestEntry {
    std::string clip_id;
    std::filesystem::path path;
    std::string modality;
    std::string split; // "train" or "test"
    double native_fps = 8.0;
    std::optional<std::filesystem::path> label_path;
};

/// Whitespace-separated columns `clip_id path modality split native_fps label_path`
/// with one header line; '#' starts a comment; '-' means no label file.
/// Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, std::span<const ManifestEntry> entries);

struct LoadOptions {
    int height = 64;
    int width = 64;
    double target_fps = 8.0;
};

/// Frame folders (sorted file names) or video files, preprocessed and
/// resampled; labels follow the same index list.
DatasetSplit load_directory(const std::filesystem::path& manifest, const LoadOptions& options = {});

/// Writes every clip as a folder of 16-bit PNG frames plus label files and a manifest.
void write_dataset(const DatasetSplit& split, const std::filesystem::path& root, double fps = 8.0);

/// Pairs clips of two modalities by clip_id; throws DataError unless lengths,
/// timestamps and labels agree.
std::vector<std::pair<const VideoClip*, const VideoClip*>>
pair_modalities(std::span<const VideoClip> a, std::span<const VideoClip> b);

} // namespace tempshift
