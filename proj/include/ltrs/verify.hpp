#pragma once

#include "ltrs/mask.hpp"
#include "ltrs/motion.hpp"

#include <cstdint>
#include <string>

namespace ltrs {

/// Mask invariance of T maps: a dead-leaves scene and a globally shifted copy
/// are captured through the same mask (noiseless, circular), and the T map of
/// the pair is compared with the T map of the raw frames.
struct InvarianceOptions {
    int masks = 20;
    int shifts = 10;
    int size = 256;
    int max_shift = 32;
    MaskFamily family = MaskFamily::Pseudorandom;
    double open_fraction = 0.5;
    double epsilon = kDefaultEpsilon;
    double l2_threshold = 0.1;
    double required_fraction = 0.95;  // of cases within l2_threshold
    std::uint64_t seed = 0;
    int threads = 1;
};

struct InvarianceResult {
    int cases = 0;
    int argmax_matches = 0;
    int within_l2 = 0;
    double max_rel_l2 = 0;
    double median_rel_l2 = 0;
    bool pass = false;  // every argmax matches and enough cases are within the threshold
};

InvarianceResult verify_invariance(const InvarianceOptions& opts);

std::string to_json(const InvarianceResult& r);

}  // namespace ltrs
