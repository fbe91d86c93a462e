#pragma once

#include "ltrs/fft.hpp"
#include "ltrs/image.hpp"

#include <string_view>

namespace ltrs {

inline constexpr double kDefaultEpsilon = 1e-3;

enum class MapKind { T, RS };

std::string_view to_string(MapKind kind);

/// Real part of the inverse DFT of a whitened cross-power spectrum, shifted
/// so that zero displacement sits at (H/2, W/2).
struct CorrelationMap {
    Image values;
    MapKind kind = MapKind::T;
    double epsilon = kDefaultEpsilon;
};

/// Zero means "use the frame height" for the bin counts.
struct LogPolarParams {
    int n_rho = 0;
    int n_theta = 0;
    double rho_min = 1.0;
};

/// Sampling grid of a log-polar image: rho_i = rho_min * exp(i * dlog_rho),
/// theta_j = j * pi / n_theta, rows indexed by rho and columns by theta.
struct LogPolarGeometry {
    int n_rho = 0;
    int n_theta = 0;
    double rho_min = 1.0;
    double rho_max = 0.0;

    double dlog_rho() const;
    double dtheta() const;
};

/// Resolves default bin counts against the frame size and validates.
LogPolarGeometry resolve_log_polar(const LogPolarParams& params, int height, int width);

struct LogPolarImage {
    Image values;  // n_rho x n_theta
    LogPolarGeometry geometry;
};

/// Displacement convention: frame2(p) = frame1(p - (dx, dy)), i.e. content
/// moves by (+dx, +dy). Rotation is measured from +x towards +y (image rows
/// grow downwards) and scale is the size ratio frame2 / frame1.
struct MotionEstimate {
    double dx = 0.0;
    double dy = 0.0;
    double dtheta = 0.0;  // [-pi/2, pi/2)
    double scale = 1.0;
    double peak_value = 0.0;
    double confidence = 0.0;
    double rs_peak_value = 0.0;
    double rs_confidence = 0.0;
};

/// Whitened cross-power map of F1 * conj(F2) / (|F1 * conj(F2)| + eps * m), where m
/// is the median non-DC magnitude of the product. Scaling eps by m makes the map
/// invariant to the gain of either frame. With frame2 = frame1 shifted by d the
/// peak lands at centre - d.
CorrelationMap cross_power(const Frame& f1, const Frame& f2, double epsilon = kDefaultEpsilon);
CorrelationMap cross_power(const Spectrum& s1, const Spectrum& s2, double epsilon = kDefaultEpsilon);

/// Translation map between two (coded-aperture) frames.
CorrelationMap t_map(const Frame& ca1, const Frame& ca2, double epsilon = kDefaultEpsilon);

/// Magnitude of the centred DFT of f, bilinearly sampled on a log-polar grid
/// with rho_max = min(H, W) / 2 and theta in [0, pi). Samples off the grid are 0
/// and the DC bin is excluded.
LogPolarImage log_polar_magnitude(const Frame& f, const LogPolarParams& params = {});
LogPolarImage log_polar_magnitude(const Spectrum& spec, const LogPolarParams& params = {});

/// Phase correlation of the two log-polar magnitude images.
CorrelationMap rs_map(const Frame& ca1, const Frame& ca2, double epsilon = kDefaultEpsilon,
                      const LogPolarParams& params = {});
CorrelationMap rs_map(const LogPolarImage& lp1, const LogPolarImage& lp2, double epsilon = kDefaultEpsilon);

/// Ratio of the top peak to the best value outside its 3x3 (periodic)
/// neighbourhood; +inf when that runner-up is not positive.
double peak_confidence(const Image& map);

/// Integer-bin peak read-out of a T map and an RS map.
MotionEstimate recover_motion(const CorrelationMap& t, const CorrelationMap& rs, const LogPolarGeometry& geometry);

}  // namespace ltrs
