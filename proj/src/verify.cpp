#include "ltrs/verify.hpp"

#include "ltrs/error.hpp"
#include "ltrs/optics.hpp"
#include "ltrs/parallel.hpp"
#include "ltrs/random.hpp"
#include "ltrs/synth.hpp"

#include <json.hpp>

#include <algorithm>

namespace ltrs {

InvarianceResult verify_invariance(const InvarianceOptions& opts) {
    if (opts.masks < 1 || opts.shifts < 1) throw Error(ErrorCode::Parameter, "need at least one mask and one shift");
    if (opts.max_shift < 1 || 2 * opts.max_shift >= opts.size) {
        throw Error(ErrorCode::Parameter, "max_shift must be in [1, size/2)");
    }
    const auto shifts = static_cast<std::size_t>(opts.shifts);
    const std::size_t n = static_cast<std::size_t>(opts.masks) * shifts;
    std::vector<double> l2(n);
    std::vector<char> same_peak(n);
    CaptureConfig cfg;
    cfg.normalize_output = false;

    parallel_for(static_cast<std::size_t>(opts.masks), opts.threads, [&](std::size_t m) {
        const Mask mask = generate_mask(opts.family, opts.size, opts.size, opts.open_fraction, derive_seed(opts.seed, {m, 1}));
        const CodedCamera camera(mask, cfg);
        const Image scene = dead_leaves(opts.size, opts.size, derive_seed(opts.seed, {m, 2}));
        const Frame ca0 = camera.capture(scene);
        Rng rng = make_rng(opts.seed, {m, 3});
        std::uniform_int_distribution<int> d(-opts.max_shift, opts.max_shift);
        for (std::size_t k = 0; k < shifts; ++k) {
            int dx = 0, dy = 0;
            while (dx == 0 && dy == 0) {
                dx = d(rng);
                dy = d(rng);
            }
            const Image moved = circshift(scene, dx, dy);
            const CorrelationMap raw = t_map(scene, moved, opts.epsilon);
            const CorrelationMap ca = t_map(ca0, camera.capture(moved), opts.epsilon);
            const Peak pr = argmax(raw.values), pc = argmax(ca.values);
            same_peak[m * shifts + k] = pr.row == pc.row && pr.col == pc.col;
            l2[m * shifts + k] = relative_l2(ca.values, raw.values);
        }
    });

    InvarianceResult r;
    r.cases = static_cast<int>(n);
    r.argmax_matches = static_cast<int>(std::count(same_peak.begin(), same_peak.end(), 1));
    r.within_l2 = static_cast<int>(std::count_if(l2.begin(), l2.end(), [&](double v) { return v <= opts.l2_threshold; }));
    r.max_rel_l2 = *std::max_element(l2.begin(), l2.end());
    std::nth_element(l2.begin(), l2.begin() + static_cast<std::ptrdiff_t>(n / 2), l2.end());
    r.median_rel_l2 = l2[n / 2];
    r.pass = r.argmax_matches == r.cases &&
             static_cast<double>(r.within_l2) >= opts.required_fraction * static_cast<double>(r.cases);
    return r;
}

std::string to_json(const InvarianceResult& r) {
    return nlohmann::json{{"pass", r.pass},
                          {"cases", r.cases},
                          {"argmax_matches", r.argmax_matches},
                          {"within_l2", r.within_l2},
                          {"max_rel_l2", r.max_rel_l2},
                          {"median_rel_l2", r.median_rel_l2}}
        .dump(2);
}

}  // namespace ltrs
