#include "ltrs/mask.hpp"

#include "ltrs/error.hpp"
#include "ltrs/fft.hpp"
#include "ltrs/pgm.hpp"
#include "ltrs/random.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace ltrs {

namespace {

// Fibonacci LFSR taps (1-based bit positions) of primitive polynomials.
constexpr std::array<std::array<int, 4>, 21> kTaps = {{
    {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0},
    {3, 2, 0, 0}, {4, 3, 0, 0}, {5, 3, 0, 0}, {6, 5, 0, 0}, {7, 6, 0, 0},
    {8, 6, 5, 4}, {9, 5, 0, 0}, {10, 7, 0, 0}, {11, 9, 0, 0}, {12, 6, 4, 1},
    {13, 4, 3, 1}, {14, 5, 3, 1}, {15, 14, 0, 0}, {16, 15, 13, 4}, {17, 14, 0, 0},
    {18, 11, 0, 0}, {19, 6, 2, 1}, {20, 17, 0, 0},
}};
constexpr int kMinDegree = 3;
constexpr int kMaxDegree = 20;

std::filesystem::path sidecar_path(const std::filesystem::path& pgm_path) {
    auto p = pgm_path;
    return p.replace_extension(".json");
}

}  // namespace

std::string_view to_string(MaskFamily family) {
    switch (family) {
        case MaskFamily::Pseudorandom: return "pseudorandom";
        case MaskFamily::MlsSeparable: return "mls-separable";
        case MaskFamily::Circular: return "circular";
    }
    return "unknown";
}

std::optional<MaskFamily> parse_mask_family(std::string_view name) {
    if (name == "pseudorandom") return MaskFamily::Pseudorandom;
    if (name == "mls-separable") return MaskFamily::MlsSeparable;
    if (name == "circular") return MaskFamily::Circular;
    return std::nullopt;
}

Mask::Mask(Image pattern, MaskFamily family, std::uint64_t seed)
    : pattern_(std::move(pattern)), family_(family), seed_(seed) {
    if (pattern_.empty()) throw Error(ErrorCode::Parameter, "mask pattern is empty");
    double open = 0.0;
    for (double v : pattern_.values()) {
        if (v != 0.0 && v != 1.0) throw Error(ErrorCode::Validation, "mask cells must be exactly 0 or 1");
        open += v;
    }
    open_fraction_ = open / static_cast<double>(pattern_.size());
}

Mask Mask::delta(int height, int width) {
    Image p(height, width, 0.0);
    p(0, 0) = 1.0;
    return Mask(std::move(p), MaskFamily::Pseudorandom, 0);
}

Mask Mask::filled(int height, int width, double value) {
    return Mask(Image(height, width, value), MaskFamily::Pseudorandom, 0);
}

std::optional<int> mls_degree_for(int length) {
    std::optional<int> best;
    for (int k = kMinDegree; k <= kMaxDegree; ++k) {
        if ((1 << k) - 1 <= length) best = k;
    }
    return best;
}

std::vector<int> mls_sequence(int degree, std::uint32_t state) {
    if (degree < kMinDegree || degree > kMaxDegree) {
        throw Error(ErrorCode::UnsupportedSize, "no MLS taps for degree " + std::to_string(degree));
    }
    const std::uint32_t mask = (1u << degree) - 1u;
    state &= mask;
    if (state == 0) throw Error(ErrorCode::Parameter, "LFSR state must be nonzero");
    const auto& taps = kTaps[static_cast<std::size_t>(degree)];
    const std::size_t period = mask;
    std::vector<int> seq(period);
    for (std::size_t i = 0; i < period; ++i) {
        seq[i] = static_cast<int>(state & 1u);
        std::uint32_t fb = 0;
        for (int t : taps) {
            if (t > 0) fb ^= (state >> (degree - t)) & 1u;
        }
        state = (state >> 1) | (fb << (degree - 1));
    }
    return seq;
}

Mask generate_mask(MaskFamily family, int height, int width, double open_fraction, std::uint64_t seed) {
    if (height < 8 || width < 8) throw Error(ErrorCode::Parameter, "mask dimensions must be >= 8");
    if (!(open_fraction > 0.0 && open_fraction < 1.0)) {
        throw Error(ErrorCode::Parameter, "open_fraction must lie in (0, 1)");
    }
    Image p(height, width, 0.0);
    switch (family) {
        case MaskFamily::Pseudorandom: {
            Rng rng = make_rng(seed, {0x6d61736bULL});
            std::bernoulli_distribution clear(open_fraction);
            for (double& v : p.values()) v = clear(rng) ? 1.0 : 0.0;
            break;
        }
        case MaskFamily::MlsSeparable: {
            const auto kr = mls_degree_for(height);
            const auto kc = mls_degree_for(width);
            if (!kr || !kc) throw Error(ErrorCode::UnsupportedSize, "no supported MLS length fits the mask size");
            auto start = [seed](int k, std::uint64_t stream) {
                const std::uint64_t period = (1ULL << k) - 1ULL;
                return static_cast<std::uint32_t>(derive_seed(seed, {stream}) % period + 1ULL);
            };
            const auto rows = mls_sequence(*kr, start(*kr, 1));
            const auto cols = mls_sequence(*kc, start(*kc, 2));
            for (int r = 0; r < height; ++r) {
                const int a = rows[static_cast<std::size_t>(r) % rows.size()];
                for (int c = 0; c < width; ++c) p(r, c) = a * cols[static_cast<std::size_t>(c) % cols.size()];
            }
            break;
        }
        case MaskFamily::Circular: {
            const double radius = std::sqrt(open_fraction * height * width / std::numbers::pi);
            const double cy = (height - 1) / 2.0;
            const double cx = (width - 1) / 2.0;
            for (int r = 0; r < height; ++r) {
                for (int c = 0; c < width; ++c) {
                    const double dy = r - cy;
                    const double dx = c - cx;
                    p(r, c) = dy * dy + dx * dx <= radius * radius ? 1.0 : 0.0;
                }
            }
            seed = 0;
            break;
        }
    }
    return Mask(std::move(p), family, seed);
}

SpectralReport spectral_report(const Mask& mask, double relative_threshold) {
    const Spectrum spec = forward_fft(mask.pattern());
    SpectralReport rep;
    rep.threshold = relative_threshold * std::abs(spec(0, 0));
    rep.min_magnitude = std::numeric_limits<double>::infinity();
    double total = 0.0;
    double below = 0.0;
    for (int r = 0; r < spec.height(); ++r) {
        for (int c = 0; c < spec.cols(); ++c) {
            const double m = std::abs(spec(r, c));
            const int mult = spec.multiplicity(c);
            rep.min_magnitude = std::min(rep.min_magnitude, m);
            total += mult * m;
            if (!(r == 0 && c == 0) && m < rep.threshold) below += mult;
        }
    }
    const double n = static_cast<double>(mask.pattern().size());
    rep.mean_magnitude = total / n;
    rep.fraction_below_threshold = n > 1 ? below / (n - 1.0) : 0.0;
    return rep;
}

bool is_broadband(const SpectralReport& report, double max_fraction) {
    return report.fraction_below_threshold <= max_fraction;
}

void write_mask(const std::filesystem::path& pgm_path, const Mask& mask) {
    write_pgm(pgm_path, mask.pattern(), 8);
    nlohmann::json meta = {
        {"family", to_string(mask.family())},
        {"seed", mask.seed()},
        {"open_fraction", mask.open_fraction()},
        {"height", mask.height()},
        {"width", mask.width()},
    };
    std::ofstream out(sidecar_path(pgm_path));
    if (!out) throw Error(ErrorCode::Io, "cannot write mask sidecar for " + pgm_path.string());
    out << meta.dump(2) << '\n';
}

Mask read_mask(const std::filesystem::path& pgm_path) {
    PgmImage pgm = read_pgm(pgm_path);
    std::ifstream in(sidecar_path(pgm_path));
    if (!in) throw Error(ErrorCode::Io, "missing mask sidecar for " + pgm_path.string());
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, std::string("malformed mask sidecar: ") + e.what());
    }
    auto family = parse_mask_family(meta.value("family", ""));
    if (!family) throw Error(ErrorCode::Format, "mask sidecar has unknown family");
    if (meta.value("height", -1) != pgm.image.height() || meta.value("width", -1) != pgm.image.width()) {
        throw Error(ErrorCode::Validation, "mask sidecar dimensions disagree with the PGM");
    }
    for (double& v : pgm.image.values()) v = v >= 0.5 ? 1.0 : 0.0;
    return Mask(std::move(pgm.image), *family, meta.value("seed", std::uint64_t{0}));
}

}  // namespace ltrs
