#pragma once

#include "ltrs/clip.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ltrs {

enum class MotionClass { TranslateH, TranslateV, Diagonal, Rotate, ScalePulse, Jump, Still };

std::string_view to_string(MotionClass c);
MotionClass parse_motion_class(std::string_view name);
const std::vector<MotionClass>& all_motion_classes();

/// Parameters of one synthetic clip: a textured sprite moving over a static
/// background. `speed` is px/frame for the translating classes and `jump`,
/// rad/frame for `rotate`, and log-scale change per frame for `scale-pulse`.
struct SynthSpec {
    MotionClass motion = MotionClass::Still;
    int height = 128;
    int width = 128;
    int length = 21;
    double speed = 2.0;
    int sprite_size = 40;  // bounding square of the unscaled sprite
    int direction = 0;     // +1 / -1; 0 draws it from the seed
    int period = 8;        // frames per cycle for scale-pulse and jump
    bool flat_background = false;
    double fps = 25.0;
    std::uint64_t seed = 0;
};

/// Deterministic in the spec. Per-frame sprite pose relative to frame 0 is
/// recorded in provenance.motion. Throws Parameter when the sprite cannot fit.
Clip generate_clip(const SynthSpec& spec);

/// Dead-leaves scene: occluding disks with radius density ~ 1/r^3 on a grey
/// base, wrapped periodically. Its spectrum falls off like a natural image's.
Image dead_leaves(int height, int width, std::uint64_t seed, int count = 400);

struct AugmentOptions {
    bool vertical_flip = true;
    bool horizontal_flip = false;
};

/// Rescale so the short side is uniform in [target, round(target * 8 / 7)],
/// flip with probability 1/2, and crop a random target x target window. One
/// draw is applied to every frame. Throws Parameter if target exceeds the
/// clip's short side or is below 8.
Clip augment(const Clip& clip, int target, std::uint64_t seed, const AugmentOptions& opts = {});

/// Directory of frame_NNNN.pgm files plus manifest.json.
void save_clip_dir(const std::filesystem::path& dir, const Clip& clip, int bit_depth = 8);
Clip load_clip_dir(const std::filesystem::path& dir);

struct BenchmarkSpec {
    std::vector<MotionClass> classes = all_motion_classes();
    int clips_per_class = 60;
    int size = 128;
    int length = 21;
    std::uint64_t seed = 0;
    // A textured static background puts a large zero-shift peak in every T map
    // and buries the sprite's own peak once maps are average-pooled.
    bool flat_background = true;
    double train_fraction = 0.70;
    double val_fraction = 0.15;
};

/// Labelled clips and a per-class stratified train/val/test split. Clips are
/// produced on demand, either from their recipe or from a clip directory.
struct Benchmark {
    std::vector<std::string> names;
    std::vector<int> labels;  // index into class_names
    std::vector<std::string> class_names;
    std::vector<SynthSpec> specs;              // filled by make_benchmark
    std::vector<std::filesystem::path> dirs;   // filled by load_benchmark
    std::vector<std::size_t> train, val, test;

    std::size_t size() const noexcept { return labels.size(); }
    Clip clip(std::size_t i) const;
};

Benchmark make_benchmark(const BenchmarkSpec& spec);

/// Writes every clip under dir/<name>/ and dir/benchmark.json with the split.
void write_benchmark(const std::filesystem::path& dir, const Benchmark& bench, int bit_depth = 8);
Benchmark load_benchmark(const std::filesystem::path& dir);

}  // namespace ltrs
