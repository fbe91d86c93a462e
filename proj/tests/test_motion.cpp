#include "ltrs/error.hpp"
#include "ltrs/motion.hpp"
#include "ltrs/optics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ltrs;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Peak expected_peak(const Image& map, int dx, int dy) {
    const int h = map.height(), w = map.width();
    return {((h / 2 - dy) % h + h) % h, ((w / 2 - dx) % w + w) % w, 0.0};
}

}  // namespace

TEST_SUITE("motion") {

TEST_CASE("identical frames peak at the centre") {
    const Image f = oracle::random_frame(32, 32, 1);
    const auto m = cross_power(f, f);
    const Peak p = argmax(m.values);
    CHECK(p.row == 16);
    CHECK(p.col == 16);
    CHECK(p.value > 0.99);
}

TEST_CASE("shift (3, -2) peaks where the brute-force correlation says") {
    const Image f1 = oracle::random_frame(32, 32, 2);
    const Image f2 = circshift(f1, 3, -2);
    const auto truth = oracle::xcorr_argmax(f1, f2);
    REQUIRE(truth.dx == 3);
    REQUIRE(truth.dy == -2);

    const auto m = cross_power(f1, f2);
    const Peak p = argmax(m.values);
    // c(p) = delta(p + dp): the peak sits at centre - dp
    CHECK(p.col == 16 - 3);
    CHECK(p.row == 16 + 2);
}

TEST_CASE("gain invariance") {
    const Image f1 = oracle::random_frame(32, 32, 3);
    const Image f2 = circshift(oracle::random_frame(32, 32, 3), 1, 4);
    const auto base = cross_power(f1, f2);
    CHECK(max_abs_diff(cross_power(scaled(f1, 10), scaled(f2, 10)).values, base.values) <= 1e-6);

    std::mt19937 gen(4);
    std::uniform_real_distribution<double> gain(0.1, 10.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double a = gain(gen), b = gain(gen);
        REQUIRE(max_abs_diff(cross_power(scaled(f1, a), scaled(f2, b)).values, base.values) <= 1e-6);
    }
}

TEST_CASE("shift covariance over random shifts") {
    const Image f = oracle::blob_texture(48, 48, 5);
    std::mt19937 gen(5);
    std::uniform_int_distribution<int> d(-20, 19);
    for (int trial = 0; trial < 10; ++trial) {
        const int dx = d(gen), dy = d(gen);
        const auto m = cross_power(f, circshift(f, dx, dy));
        const Peak p = argmax(m.values);
        const Peak e = expected_peak(m.values, dx, dy);
        REQUIRE(p.row == e.row);
        REQUIRE(p.col == e.col);
    }
}

TEST_CASE("errors") {
    const Image a = oracle::random_frame(16, 16, 6);
    const Image b = oracle::random_frame(16, 8, 6);
    CHECK_THROWS_AS(cross_power(a, b), Error);
    CHECK_THROWS_AS(cross_power(a, a, 0.0), Error);
    CHECK_THROWS_AS(log_polar_magnitude(a, LogPolarParams{4, 16, 1.0}), Error);
    CHECK_THROWS_AS(log_polar_magnitude(a, LogPolarParams{16, 16, 0.5}), Error);
}

TEST_CASE("t_map of CA frames matches the raw-frame map") {
    const Image scene = oracle::dead_leaves(256, 256, 7);
    const Mask mask = generate_mask(MaskFamily::Pseudorandom, 256, 256, 0.5, 7);
    const CaptureConfig cfg;
    const Image s2 = circshift(scene, -6, 9);
    const auto raw = t_map(scene, s2);
    const auto ca = t_map(capture(scene, mask, cfg), capture(s2, mask, cfg));
    const Peak pr = argmax(raw.values), pc = argmax(ca.values);
    CHECK(pr.row == pc.row);
    CHECK(pr.col == pc.col);
    CHECK(relative_l2(ca.values, raw.values) <= 0.1);

    const Image d = capture(scene, mask, cfg);
    const Peak self = argmax(t_map(d, d).values);
    CHECK(self.row == 128);
    CHECK(self.col == 128);
}

TEST_CASE("log-polar geometry and constant frames") {
    const auto lp = log_polar_magnitude(Image(32, 32, 0.5));
    CHECK(lp.values.height() == 32);
    CHECK(lp.values.width() == 32);
    CHECK(lp.geometry.rho_max == 16.0);
    // all energy is at DC; bilinear samples touch it only while rho < sqrt(2)
    const double dlog = lp.geometry.dlog_rho();
    for (int i = 0; i < 32; ++i) {
        if (std::exp(i * dlog) < std::sqrt(2.0)) continue;
        for (double v : lp.values.row(i)) REQUIRE(std::abs(v) < 1e-9);
    }
}

TEST_CASE("theta axis is periodic with period pi") {
    const Image f = oracle::random_frame(64, 64, 8);
    const Image rotated = flip_horizontal(flip_vertical(f));  // exact rotation by pi
    const auto a = log_polar_magnitude(f);
    const auto b = log_polar_magnitude(rotated);
    CHECK(relative_l2(b.values, a.values) <= 1e-3);
}

TEST_CASE("rotation shifts the log-polar image along theta") {
    const int n = 128;
    const auto blobs = oracle::random_blobs(30, 26, 9);
    const Image f = oracle::render_blobs(blobs, n, n, 0.0, 1.0);
    for (double deg : {10.0, 30.0, 60.0}) {
        const Image g = oracle::render_blobs(blobs, n, n, deg * kDeg, 1.0);
        const auto lpf = log_polar_magnitude(f);
        const auto lpg = log_polar_magnitude(g);
        const double bins = deg * kDeg / lpf.geometry.dtheta();
        // best cyclic theta shift by direct comparison
        int best = 0;
        double best_err = 1e300;
        for (int k = 0; k < n; ++k) {
            double err = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double d = lpg.values(i, (j + k) % n) - lpf.values(i, j);
                    err += d * d;
                }
            if (err < best_err) {
                best_err = err;
                best = k;
            }
        }
        CHECK(std::abs(best - bins) <= 1.0);
    }
}

TEST_CASE("RS map recovers rotation and scale on raw frames") {
    const int n = 128;
    const auto blobs = oracle::random_blobs(30, 24, 10, 0.8, 1.6);
    const Image f = oracle::render_blobs(blobs, n, n, 0.0, 1.0);
    const LogPolarGeometry g = resolve_log_polar({}, n, n);

    SUBCASE("identity") {
        const auto est = recover_motion(t_map(f, f), rs_map(f, f), g);
        CHECK(est.dx == 0);
        CHECK(est.dy == 0);
        CHECK(est.dtheta == 0.0);
        CHECK(est.scale == 1.0);
    }
    SUBCASE("rotation by 30 degrees") {
        const Image r = oracle::render_blobs(blobs, n, n, 30 * kDeg, 1.0);
        const auto est = recover_motion(t_map(f, r), rs_map(f, r), g);
        CHECK(std::abs(est.dtheta - 30 * kDeg) <= g.dtheta() + 1e-12);
    }
    SUBCASE("scale by 2") {
        const Image s = oracle::render_blobs(blobs, n, n, 0.0, 2.0);
        const auto est = recover_motion(t_map(f, s), rs_map(f, s), g);
        const double bw = std::exp(g.dlog_rho()) - 1.0;
        CHECK(est.scale >= 2.0 / (1 + bw));
        CHECK(est.scale <= 2.0 * (1 + bw));
    }
}

TEST_CASE("fixed-mask CA attenuates the RS rotation peak") {
    const int n = 128;
    const LogPolarGeometry g = resolve_log_polar({}, n, n);
    const CaptureConfig cfg;
    // the rotation peak sits at centre - shift along theta, rho unchanged
    const int col = n / 2 - static_cast<int>(std::lround(30 * kDeg / g.dtheta()));
    auto near_truth = [&](const Image& m) {
        double best = -1e300;
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) best = std::max(best, m(n / 2 + dr, col + dc));
        return best;
    };
    for (unsigned seed = 11; seed < 14; ++seed) {
        const auto blobs = oracle::random_blobs(30, 24, seed, 0.8, 1.6);
        const Image f = oracle::render_blobs(blobs, n, n, 0.0, 1.0);
        const Image r = oracle::render_blobs(blobs, n, n, 30 * kDeg, 1.0);
        const Mask mask = generate_mask(MaskFamily::Pseudorandom, n, n, 0.5, seed);
        const auto raw = rs_map(f, r);
        const auto ca = rs_map(capture(f, mask, cfg), capture(r, mask, cfg));
        CHECK(near_truth(ca.values) < near_truth(raw.values));
        // the mask spectrum is common to both frames and pulls the peak to zero shift
        const auto est = recover_motion(t_map(f, r), ca, g);
        CHECK(est.dtheta == 0.0);
        CHECK(std::abs(recover_motion(t_map(f, r), raw, g).dtheta - 30 * kDeg) <= g.dtheta());
    }
}

TEST_CASE("recover_motion reads translation from the T map") {
    const Image f = oracle::random_frame(32, 32, 12);
    const Image g = circshift(f, 3, -2);
    const auto geom = resolve_log_polar({}, 32, 32);
    const auto est = recover_motion(t_map(f, g), rs_map(f, g), geom);
    CHECK(est.dx == 3);
    CHECK(est.dy == -2);
    CHECK(est.confidence > 1.0);
}

TEST_CASE("recover_motion rejects an all-zero map") {
    const auto geom = resolve_log_polar({}, 16, 16);
    CorrelationMap zero{Image(16, 16, 0.0), MapKind::T, kDefaultEpsilon};
    const Image f = oracle::random_frame(16, 16, 13);
    try {
        recover_motion(zero, rs_map(f, f), geom);
        FAIL("expected degenerate-input error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateInput);
    }
}

}  // TEST_SUITE
