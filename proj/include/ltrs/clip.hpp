#pragma once

#include "ltrs/image.hpp"

#include <string>
#include <vector>

namespace ltrs {

/// Sprite pose at one frame, relative to its pose at frame 0.
struct FrameMotion {
    double dx = 0.0;
    double dy = 0.0;
    double angle = 0.0;  // radians
    double scale = 1.0;
};

struct ClipLabel {
    int id = -1;
    std::string name;
    friend bool operator==(const ClipLabel&, const ClipLabel&) = default;
};

struct Provenance {
    std::string generator;     // e.g. "synth", "load_clip_dir", "capture"
    std::string params_json;   // generator parameters, serialized
    std::vector<FrameMotion> motion;
};

/// Ordered frames of one video with uniform dimensions.
struct Clip {
    std::vector<Frame> frames;
    double fps = 25.0;
    ClipLabel label;
    Provenance provenance;

    int length() const noexcept { return static_cast<int>(frames.size()); }
    int height() const noexcept { return frames.empty() ? 0 : frames.front().height(); }
    int width() const noexcept { return frames.empty() ? 0 : frames.front().width(); }
};

/// Throws Validation unless the clip has >= min_frames frames of one shape.
void validate_clip(const Clip& clip, int min_frames = 2);

}  // namespace ltrs
