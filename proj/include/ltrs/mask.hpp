#pragma once

#include "ltrs/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

namespace ltrs {

enum class MaskFamily { Pseudorandom, MlsSeparable, Circular };

std::string_view to_string(MaskFamily family);
std::optional<MaskFamily> parse_mask_family(std::string_view name);

/// Binary transmission pattern (1 = clear, 0 = opaque). Immutable once built.
class Mask {
public:
    /// Validates that every cell is 0 or 1 and records the realized open fraction.
    Mask(Image pattern, MaskFamily family, std::uint64_t seed);

    const Image& pattern() const noexcept { return pattern_; }
    int height() const noexcept { return pattern_.height(); }
    int width() const noexcept { return pattern_.width(); }
    MaskFamily family() const noexcept { return family_; }
    std::uint64_t seed() const noexcept { return seed_; }
    double open_fraction() const noexcept { return open_fraction_; }

    /// Single clear cell at the kernel origin (0, 0); capture with it is the identity.
    static Mask delta(int height, int width);
    static Mask filled(int height, int width, double value);

private:
    Image pattern_;
    MaskFamily family_;
    std::uint64_t seed_;
    double open_fraction_;
};

/// Deterministic in all arguments.
///  - pseudorandom: i.i.d. Bernoulli(open_fraction) per cell.
///  - mls-separable: rank-one product of a row and a column maximum length
///    sequence (0/1), each the longest MLS that fits the dimension, tiled to
///    size; the seed picks the LFSR start states. The realized open fraction
///    is fixed by the sequences (about 1/4) and open_fraction is only validated.
///  - circular: centred disk whose area matches open_fraction; seed unused.
Mask generate_mask(MaskFamily family, int height, int width, double open_fraction, std::uint64_t seed);

/// One period of a maximum length sequence of degree `degree` (length 2^degree - 1),
/// values 0/1, starting from LFSR state `state` (nonzero).
std::vector<int> mls_sequence(int degree, std::uint32_t state);

/// Largest MLS degree whose period fits in `length`; nullopt if none is supported.
std::optional<int> mls_degree_for(int length);

struct SpectralReport {
    double min_magnitude = 0.0;             // over every bin, DC included
    double mean_magnitude = 0.0;            // over every bin
    double fraction_below_threshold = 0.0;  // over non-DC bins
    double threshold = 0.0;                 // absolute magnitude used
};

/// Default broadband threshold relative to the DC magnitude |A(0,0)|.
inline constexpr double kBroadbandRelativeThreshold = 1e-3;

/// Magnitudes of the unnormalized 2D DFT of the pattern. The absolute threshold
/// is relative_threshold * |A(0,0)|.
SpectralReport spectral_report(const Mask& mask, double relative_threshold = kBroadbandRelativeThreshold);

bool is_broadband(const SpectralReport& report, double max_fraction);

/// Writes `<stem>.pgm` (0 = opaque, 255 = clear) plus a sidecar `<stem>.json`.
void write_mask(const std::filesystem::path& pgm_path, const Mask& mask);
Mask read_mask(const std::filesystem::path& pgm_path);

}  // namespace ltrs
