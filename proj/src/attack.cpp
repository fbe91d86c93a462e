#include "ltrs/attack.hpp"

#include "ltrs/error.hpp"
#include "ltrs/fft.hpp"
#include "ltrs/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ltrs {

Frame autocorrelation(const Frame& f) {
    const double m = mean(f);
    Image centred = f;
    for (double& v : centred.values()) v -= m;
    Spectrum s = forward_fft(centred);
    for (Complex& c : s.values()) c = std::norm(c);
    Image ac = fftshift(inverse_fft(s));
    const double zero_lag = ac(f.height() / 2, f.width() / 2);
    // the power sum is zero only for a constant frame; rounding leaves ~1e-16
    if (!(zero_lag > 1e-12 * std::max(1.0, m * m) * static_cast<double>(f.size()))) {
        std::fill(ac.values().begin(), ac.values().end(), 0.0);
        return ac;
    }
    for (double& v : ac.values()) v /= zero_lag;
    return ac;
}

double correlation_coefficient(const Image& a, const Image& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw Error(ErrorCode::DimensionMismatch, "correlation needs equally sized images");
    }
    const double ma = mean(a), mb = mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a.values()[i] - ma, db = b.values()[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0 || sbb <= 0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

LeakageReport leakage(const Frame& scene, const Frame& ca) {
    if (scene.height() != ca.height() || scene.width() != ca.width()) {
        throw Error(ErrorCode::DimensionMismatch, "scene and CA frame differ in size");
    }
    LeakageReport r;
    r.autocorr_similarity = correlation_coefficient(autocorrelation(scene), autocorrelation(ca));
    return r;
}

LeakageReport leakage_survey(const Frame& scene, const SurveyOptions& opts) {
    if (opts.seeds < 1 || opts.families.empty()) throw Error(ErrorCode::Parameter, "survey needs families and seeds");
    const Frame reference = autocorrelation(scene);
    const auto per_family = static_cast<std::size_t>(opts.seeds);
    std::vector<double> sims(opts.families.size() * per_family);
    parallel_for(sims.size(), opts.threads, [&](std::size_t i) {
        const MaskFamily fam = opts.families[i / per_family];
        const std::uint64_t seed = opts.first_seed + i % per_family;
        const Mask mask = generate_mask(fam, scene.height(), scene.width(), opts.open_fraction, seed);
        const Frame ca = CodedCamera(mask, opts.capture).capture(scene, seed);
        sims[i] = correlation_coefficient(reference, autocorrelation(ca));
    });

    LeakageReport r;
    for (std::size_t k = 0; k < opts.families.size(); ++k) {
        const auto first = sims.begin() + static_cast<std::ptrdiff_t>(k * per_family);
        const auto last = first + static_cast<std::ptrdiff_t>(per_family);
        const auto [lo, hi] = std::minmax_element(first, last);
        r.families.push_back({opts.families[k], opts.seeds, std::accumulate(first, last, 0.0) / opts.seeds, *lo, *hi});
    }
    r.autocorr_similarity = std::accumulate(sims.begin(), sims.end(), 0.0) / static_cast<double>(sims.size());
    return r;
}

std::string to_json(const LeakageReport& report) {
    nlohmann::json fams = nlohmann::json::array();
    for (const auto& f : report.families) {
        fams.push_back({{"family", to_string(f.family)},
                        {"trials", f.trials},
                        {"mean", f.mean},
                        {"min", f.min},
                        {"max", f.max}});
    }
    nlohmann::json j = {{"autocorr_similarity", report.autocorr_similarity}};
    if (!fams.empty()) j["families"] = fams;
    return j.dump(2);
}

}  // namespace ltrs
