#include "ltrs/motion.hpp"

#include "ltrs/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ltrs {

std::string_view to_string(MapKind kind) { return kind == MapKind::T ? "T" : "RS"; }

double LogPolarGeometry::dlog_rho() const { return std::log(rho_max / rho_min) / n_rho; }

double LogPolarGeometry::dtheta() const { return std::numbers::pi / n_theta; }

LogPolarGeometry resolve_log_polar(const LogPolarParams& params, int height, int width) {
    LogPolarGeometry g;
    g.n_rho = params.n_rho > 0 ? params.n_rho : height;
    g.n_theta = params.n_theta > 0 ? params.n_theta : height;
    g.rho_min = params.rho_min;
    g.rho_max = std::min(height, width) / 2.0;
    if (g.n_rho < 8 || g.n_theta < 8) throw Error(ErrorCode::Parameter, "log-polar bin counts must be >= 8");
    if (!(g.rho_min >= 1.0) || !(g.rho_min < g.rho_max)) {
        throw Error(ErrorCode::Parameter, "log-polar rho_min must satisfy 1 <= rho_min < min(H, W) / 2");
    }
    return g;
}

CorrelationMap cross_power(const Spectrum& s1, const Spectrum& s2, double epsilon) {
    if (s1.height() != s2.height() || s1.width() != s2.width()) {
        throw Error(ErrorCode::DimensionMismatch, "cross_power: frame dimensions differ");
    }
    if (!(epsilon > 0.0)) throw Error(ErrorCode::Parameter, "cross_power: epsilon must be > 0");

    Spectrum prod(s1.height(), s1.width());
    auto pv = prod.values();
    auto v1 = s1.values();
    auto v2 = s2.values();
    for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = v1[i] * std::conj(v2[i]);

    // median over the stored (non-redundant) half plane, DC excluded
    std::vector<double> mags;
    mags.reserve(pv.size());
    for (std::size_t i = 1; i < pv.size(); ++i) mags.push_back(std::abs(pv[i]));
    double reference = 0.0;
    if (!mags.empty()) {
        auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
        std::nth_element(mags.begin(), mid, mags.end());
        reference = *mid;
    }
    if (reference <= 0.0) reference = std::abs(prod(0, 0));
    const double floor = epsilon * reference;

    for (Complex& x : pv) {
        const double m = std::abs(x) + floor;
        x = m > 0.0 ? x / m : Complex{};
    }
    return {fftshift(inverse_fft(prod)), MapKind::T, epsilon};
}

CorrelationMap cross_power(const Frame& f1, const Frame& f2, double epsilon) {
    if (!f1.same_shape(f2)) throw Error(ErrorCode::DimensionMismatch, "cross_power: frame dimensions differ");
    return cross_power(forward_fft(f1), forward_fft(f2), epsilon);
}

CorrelationMap t_map(const Frame& ca1, const Frame& ca2, double epsilon) {
    CorrelationMap m = cross_power(ca1, ca2, epsilon);
    m.kind = MapKind::T;
    return m;
}

LogPolarImage log_polar_magnitude(const Spectrum& spec, const LogPolarParams& params) {
    const int h = spec.height();
    const int w = spec.width();
    const LogPolarGeometry g = resolve_log_polar(params, h, w);

    // centred magnitude: DC at (h/2, w/2)
    Image centred(h, w);
    for (int r = 0; r < h; ++r) {
        const int sr = (r + h - h / 2) % h;
        for (int c = 0; c < w; ++c) centred(r, c) = std::abs(spec.full(sr, (c + w - w / 2) % w));
    }
    // Bilinear cells with rho < sqrt(2) touch the DC bin, which carries no
    // rotation or scale and can dwarf every other bin on a bright frame.
    centred(h / 2, w / 2) = 0.0;

    LogPolarImage lp{Image(g.n_rho, g.n_theta), g};
    const double cy = h / 2;
    const double cx = w / 2;
    const double dlog = g.dlog_rho();
    const double dth = g.dtheta();
    std::vector<double> cos_t(static_cast<std::size_t>(g.n_theta));
    std::vector<double> sin_t(static_cast<std::size_t>(g.n_theta));
    for (int j = 0; j < g.n_theta; ++j) {
        cos_t[static_cast<std::size_t>(j)] = std::cos(j * dth);
        sin_t[static_cast<std::size_t>(j)] = std::sin(j * dth);
    }
    for (int i = 0; i < g.n_rho; ++i) {
        const double rho = g.rho_min * std::exp(i * dlog);
        auto dst = lp.values.row(i);
        for (int j = 0; j < g.n_theta; ++j) {
            const auto js = static_cast<std::size_t>(j);
            dst[js] = sample_bilinear(centred, cy + rho * sin_t[js], cx + rho * cos_t[js], 0.0);
        }
    }
    return lp;
}

LogPolarImage log_polar_magnitude(const Frame& f, const LogPolarParams& params) {
    if (f.height() < 8 || f.width() < 8) throw Error(ErrorCode::Parameter, "frame dimensions must be >= 8");
    return log_polar_magnitude(forward_fft(f), params);
}

CorrelationMap rs_map(const LogPolarImage& lp1, const LogPolarImage& lp2, double epsilon) {
    CorrelationMap m = cross_power(lp1.values, lp2.values, epsilon);
    m.kind = MapKind::RS;
    return m;
}

CorrelationMap rs_map(const Frame& ca1, const Frame& ca2, double epsilon, const LogPolarParams& params) {
    if (!ca1.same_shape(ca2)) throw Error(ErrorCode::DimensionMismatch, "rs_map: frame dimensions differ");
    return rs_map(log_polar_magnitude(ca1, params), log_polar_magnitude(ca2, params), epsilon);
}

double peak_confidence(const Image& map) {
    const Peak top = argmax(map);
    double second = -std::numeric_limits<double>::infinity();
    const int h = map.height();
    const int w = map.width();
    for (int r = 0; r < h; ++r) {
        int dr = std::abs(r - top.row);
        dr = std::min(dr, h - dr);
        for (int c = 0; c < w; ++c) {
            int dc = std::abs(c - top.col);
            dc = std::min(dc, w - dc);
            if (dr <= 1 && dc <= 1) continue;
            second = std::max(second, map(r, c));
        }
    }
    if (!(second > 0.0)) return std::numeric_limits<double>::infinity();
    return top.value / second;
}

namespace {

void require_nondegenerate(const CorrelationMap& m, const char* what) {
    if (m.values.empty()) throw Error(ErrorCode::DegenerateInput, std::string(what) + " map is empty");
    for (double v : m.values.values()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::DegenerateInput, std::string(what) + " map is not finite");
    }
    for (double v : m.values.values()) {
        if (v != 0.0) return;
    }
    throw Error(ErrorCode::DegenerateInput, std::string(what) + " map is all zero");
}

}  // namespace

MotionEstimate recover_motion(const CorrelationMap& t, const CorrelationMap& rs, const LogPolarGeometry& geometry) {
    require_nondegenerate(t, "T");
    require_nondegenerate(rs, "RS");
    if (rs.values.height() != geometry.n_rho || rs.values.width() != geometry.n_theta) {
        throw Error(ErrorCode::DimensionMismatch, "RS map does not match the log-polar geometry");
    }
    MotionEstimate est;
    const Peak tp = argmax(t.values);
    est.dx = -(tp.col - t.values.width() / 2);
    est.dy = -(tp.row - t.values.height() / 2);
    est.peak_value = tp.value;
    est.confidence = peak_confidence(t.values);

    const Peak rp = argmax(rs.values);
    const int k_theta = -(rp.col - geometry.n_theta / 2);
    const int k_rho = -(rp.row - geometry.n_rho / 2);
    est.dtheta = k_theta * geometry.dtheta();
    if (est.dtheta >= std::numbers::pi / 2) est.dtheta -= std::numbers::pi;
    // content moving outwards in rho means the spectrum grew, i.e. the scene shrank
    est.scale = std::exp(-k_rho * geometry.dlog_rho());
    est.rs_peak_value = rp.value;
    est.rs_confidence = peak_confidence(rs.values);
    return est;
}

}  // namespace ltrs
