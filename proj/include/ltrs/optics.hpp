#pragma once

#include "ltrs/clip.hpp"
#include "ltrs/fft.hpp"
#include "ltrs/mask.hpp"

#include <cstdint>

namespace ltrs {

struct CaptureConfig {
    bool boundary_effect = false;
    double noise_sigma = 0.0;
    bool normalize_output = true;
    std::uint64_t seed = 0;
};

/// Lensless coded-aperture camera: observation = scene (*) mask + noise.
///
/// Without boundary effect the convolution is circular with the mask origin
/// at index (0, 0). With boundary effect both operands are zero-padded to
/// 2H x 2W, linearly convolved, and the central H x W window (offset H/2, W/2)
/// is kept. The convolution is the unnormalized sum. When normalize_output is
/// set the noiseless observation is divided by its maximum and noise_sigma is
/// then in units of that peak; otherwise noise is added in raw units.
class CodedCamera {
public:
    CodedCamera(const Mask& mask, const CaptureConfig& cfg);

    /// Noise is drawn from a generator seeded by (cfg.seed, noise_stream).
    Frame capture(const Frame& scene, std::uint64_t noise_stream = 0) const;

    const CaptureConfig& config() const noexcept { return cfg_; }
    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }

private:
    CaptureConfig cfg_;
    int height_;
    int width_;
    Spectrum kernel_;  // mask spectrum, padded to 2H x 2W with boundary effect
};

Frame capture(const Frame& frame, const Mask& mask, const CaptureConfig& cfg);

/// One mask for the whole clip; frame i uses noise stream i.
Clip capture_clip(const Clip& clip, const Mask& mask, const CaptureConfig& cfg);

}  // namespace ltrs
