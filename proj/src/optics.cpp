#include "ltrs/optics.hpp"

#include "ltrs/error.hpp"
#include "ltrs/random.hpp"

#include <random>

namespace ltrs {

namespace {

Image zero_pad(const Image& img, int height, int width) {
    Image out(height, width, 0.0);
    for (int r = 0; r < img.height(); ++r) {
        auto src = img.row(r);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

}  // namespace

CodedCamera::CodedCamera(const Mask& mask, const CaptureConfig& cfg)
    : cfg_(cfg), height_(mask.height()), width_(mask.width()) {
    if (!(cfg.noise_sigma >= 0.0)) throw Error(ErrorCode::Parameter, "noise_sigma must be >= 0");
    kernel_ = cfg.boundary_effect ? forward_fft(zero_pad(mask.pattern(), 2 * height_, 2 * width_))
                                  : forward_fft(mask.pattern());
}

Frame CodedCamera::capture(const Frame& scene, std::uint64_t noise_stream) const {
    if (scene.height() != height_ || scene.width() != width_) {
        throw Error(ErrorCode::DimensionMismatch, "frame and mask dimensions differ");
    }
    Spectrum spec = cfg_.boundary_effect ? forward_fft(zero_pad(scene, 2 * height_, 2 * width_)) : forward_fft(scene);
    auto sv = spec.values();
    auto kv = kernel_.values();
    for (std::size_t i = 0; i < sv.size(); ++i) sv[i] *= kv[i];
    Frame out = inverse_fft(spec);
    if (cfg_.boundary_effect) out = crop(out, height_ / 2, width_ / 2, height_, width_);

    if (cfg_.normalize_output) {
        const double peak = max_value(out);
        if (peak > 0.0) {
            for (double& v : out.values()) v /= peak;
        }
    }
    if (cfg_.noise_sigma > 0.0) {
        Rng rng = make_rng(cfg_.seed, {noise_stream});
        std::normal_distribution<double> noise(0.0, cfg_.noise_sigma);
        for (double& v : out.values()) v += noise(rng);
    }
    return out;
}

Frame capture(const Frame& frame, const Mask& mask, const CaptureConfig& cfg) {
    return CodedCamera(mask, cfg).capture(frame);
}

Clip capture_clip(const Clip& clip, const Mask& mask, const CaptureConfig& cfg) {
    const CodedCamera camera(mask, cfg);
    Clip out;
    out.fps = clip.fps;
    out.label = clip.label;
    out.provenance = clip.provenance;
    out.frames.reserve(clip.frames.size());
    for (std::size_t i = 0; i < clip.frames.size(); ++i) out.frames.push_back(camera.capture(clip.frames[i], i));
    return out;
}

}  // namespace ltrs
