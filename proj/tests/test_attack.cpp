#include "ltrs/attack.hpp"
#include "ltrs/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace ltrs;

namespace {

// direct O(N^2) circular autocorrelation of the mean-removed frame at lag (dy, dx)
double direct_lag(const Image& f, int dy, int dx) {
    const double m = mean(f);
    double acc = 0;
    for (int r = 0; r < f.height(); ++r)
        for (int c = 0; c < f.width(); ++c) {
            const int r2 = (r + dy + f.height()) % f.height(), c2 = (c + dx + f.width()) % f.width();
            acc += (f(r, c) - m) * (f(r2, c2) - m);
        }
    return acc;
}

}  // namespace

TEST_SUITE("attack") {

TEST_CASE("autocorrelation agrees with the direct sum") {
    const Image f = oracle::blob_texture(24, 20, 3);
    const Frame ac = autocorrelation(f);
    const double zero = direct_lag(f, 0, 0);
    for (int dy = -5; dy <= 5; dy += 2)
        for (int dx = -4; dx <= 4; ++dx) CHECK(ac(12 + dy, 10 + dx) == doctest::Approx(direct_lag(f, dy, dx) / zero));
}

TEST_CASE("centre peak and even symmetry") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const Image f = oracle::dead_leaves(64, 64, seed);
        const Frame ac = autocorrelation(f);
        const Peak p = argmax(ac);
        CHECK(p.row == 32);
        CHECK(p.col == 32);
        CHECK(p.value == doctest::Approx(1.0));
        double worst = 0;
        for (int r = 1; r < 64; ++r)
            for (int c = 1; c < 64; ++c) worst = std::max(worst, std::abs(ac(r, c) - ac(64 - r, 64 - c)));
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("white noise is near a delta") {
    const Frame ac = autocorrelation(oracle::random_frame(128, 128, 5));
    double off = 0;
    for (int r = 0; r < 128; ++r)
        for (int c = 0; c < 128; ++c)
            if (r != 64 || c != 64) off = std::max(off, std::abs(ac(r, c)));
    CHECK(off <= 0.2);
}

TEST_CASE("constant frames have no autocorrelation structure") {
    const Frame ac = autocorrelation(Image(16, 16, 0.7));
    CHECK(max_value(ac) == 0.0);
    CHECK(min_value(ac) == 0.0);
}

TEST_CASE("leakage through delta, pseudorandom and all-ones masks") {
    const Image scene = oracle::dead_leaves(128, 128, 7);
    const CaptureConfig cfg;
    const Frame direct = capture(scene, Mask::delta(128, 128), cfg);
    CHECK(leakage(scene, direct).autocorr_similarity == doctest::Approx(1.0).epsilon(1e-6));

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Mask m = generate_mask(MaskFamily::Pseudorandom, 128, 128, 0.5, seed);
        CHECK(leakage(scene, capture(scene, m, cfg)).autocorr_similarity >= 0.6);
    }
    const Frame flat = capture(scene, Mask::filled(128, 128, 1.0), cfg);
    CHECK(std::abs(leakage(scene, flat).autocorr_similarity) <= 1e-6);

    CHECK_THROWS_AS(leakage(scene, Image(64, 64, 0.0)), Error);
}

TEST_CASE("pseudorandom masks on a white scene sit at one over root two") {
    // |A(k)|^2 of a Bernoulli mask behaves like Exp(1) speckle on |O(k)|^2, so the
    // correlation of the two power spectra tends to E[X] / sqrt(E[X^2]) = 1/sqrt(2)
    SurveyOptions o;
    o.families = {MaskFamily::Pseudorandom};
    const LeakageReport r = leakage_survey(oracle::random_frame(128, 128, 11), o);
    CHECK(r.autocorr_similarity == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.03));
}

TEST_CASE("noise degrades the attack") {
    const Image scene = oracle::dead_leaves(64, 64, 9);
    SurveyOptions clean;
    clean.families = {MaskFamily::Pseudorandom};
    clean.threads = 2;
    SurveyOptions noisy = clean;
    noisy.capture.noise_sigma = 0.1;
    const LeakageReport a = leakage_survey(scene, clean), b = leakage_survey(scene, noisy);
    REQUIRE(a.families.size() == 1u);
    CHECK(a.families[0].trials == 20);
    CHECK(a.autocorr_similarity > b.autocorr_similarity);
    CHECK(a.families[0].min <= a.families[0].mean);
    CHECK(a.families[0].mean <= a.families[0].max);
}

TEST_CASE("survey covers every family") {
    SurveyOptions o;
    o.seeds = 3;
    const LeakageReport r = leakage_survey(oracle::dead_leaves(64, 64, 2), o);
    REQUIRE(r.families.size() == 3u);
    for (const auto& f : r.families) {
        CHECK(f.mean >= -1.0);
        CHECK(f.mean <= 1.0);
    }
    CHECK(to_json(r).find("mls-separable") != std::string::npos);
}

}  // TEST_SUITE
