#pragma once

#include "ltrs/clip.hpp"
#include "ltrs/mask.hpp"
#include "ltrs/optics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ltrs {

/// Circular autocorrelation of the mean-removed frame, computed as the inverse
/// transform of |F|^2, shifted so zero lag sits at (H/2, W/2) and divided by
/// that zero-lag value. A constant frame gives all zeros.
Frame autocorrelation(const Frame& f);

/// Pearson correlation of two equally sized images; 0 when either is constant.
double correlation_coefficient(const Image& a, const Image& b);

struct FamilyLeakage {
    MaskFamily family = MaskFamily::Pseudorandom;
    int trials = 0;
    double mean = 0, min = 0, max = 0;
};

struct LeakageReport {
    double autocorr_similarity = 0;     // mean over every trial
    std::vector<FamilyLeakage> families;  // empty for a single scene/CA pair
};

/// How closely the autocorrelation of a CA frame tracks that of the scene.
/// Throws DimensionMismatch if the frames differ in size.
LeakageReport leakage(const Frame& scene, const Frame& ca);

struct SurveyOptions {
    std::vector<MaskFamily> families{MaskFamily::Pseudorandom, MaskFamily::MlsSeparable, MaskFamily::Circular};
    int seeds = 20;
    std::uint64_t first_seed = 1;
    double open_fraction = 0.5;
    CaptureConfig capture;
    int threads = 1;
};

/// Captures `scene` through `seeds` masks of each family and reports the
/// similarity per family.
LeakageReport leakage_survey(const Frame& scene, const SurveyOptions& opts);

std::string to_json(const LeakageReport& report);

}  // namespace ltrs
