// Acceptance harness. Prints one PASS/FAIL line per criterion and exits
// nonzero if any selected criterion fails.
//
//   ltrs_acceptance            run everything
//   ltrs_acceptance A2 A9      run a subset

#include "ltrs/attack.hpp"
#include "ltrs/error.hpp"
#include "ltrs/features.hpp"
#include "ltrs/learn.hpp"
#include "ltrs/motion.hpp"
#include "ltrs/optics.hpp"
#include "ltrs/random.hpp"
#include "ltrs/synth.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

using namespace ltrs;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------- A1

Outcome a1() {
    const std::vector<std::tuple<std::vector<int>, int, int>> table = {
        {{2, 3, 4, 6}, 13, 30}, {{3, 4, 6}, 13, 18}, {{4, 6}, 13, 10}, {{3, 4, 6}, 19, 26}, {{4, 6}, 19, 14}};
    int ok = 0;
    std::string got;
    for (const auto& [strides, l, want] : table) {
        const int c = stack_channels({strides, l, 256, 224});
        ok += c == want;
        got += std::to_string(c) + " ";
    }
    const StrideConfig one{{2}, 13, 256, 224};
    const int all = stack_channels(one), t = stack_channels(one, FeatureSet::TOnly);
    const bool single = all == 12 && t == 6 && all - t == 6;
    return {ok == 5 && single, fmt("table shapes %d/5 (%s) and s=2,l=13 -> %d channels, %d T, %d RS", ok,
                                   got.c_str(), all, t, all - t)};
}

// ---------------------------------------------------------------- A2

Outcome a2() {
    const auto t0 = Clock::now();
    const int n = 256, masks = 20, shifts = 10;
    CaptureConfig cfg;
    cfg.normalize_output = false;
    int same = 0, close = 0, cases = 0;
    double worst = 0;
    std::mt19937 gen(2024);
    std::uniform_int_distribution<int> d(-32, 32);
    for (int m = 0; m < masks; ++m) {
        const Mask mask = generate_mask(MaskFamily::Pseudorandom, n, n, 0.5, 1000 + static_cast<std::uint64_t>(m));
        const CodedCamera cam(mask, cfg);
        const Image scene = oracle::dead_leaves(n, n, 50 + static_cast<unsigned>(m));
        const Frame ca0 = cam.capture(scene);
        for (int k = 0; k < shifts; ++k, ++cases) {
            int dx = 0, dy = 0;
            while (dx == 0 && dy == 0) {
                dx = d(gen);
                dy = d(gen);
            }
            const Image moved = circshift(scene, dx, dy);
            const CorrelationMap raw = t_map(scene, moved, 1e-3);
            const CorrelationMap ca = t_map(ca0, cam.capture(moved), 1e-3);
            const Peak pr = argmax(raw.values), pc = argmax(ca.values);
            same += pr.row == pc.row && pr.col == pc.col;
            const double l2 = relative_l2(ca.values, raw.values);
            close += l2 <= 0.1;
            worst = std::max(worst, l2);
        }
    }
    const double secs = seconds_since(t0);
    const bool pass = same == cases && close >= 0.95 * cases && secs < 60;
    return {pass, fmt("argmax agree %d/%d, rel-L2 <= 0.1 in %d/%d (max %.4f), %.1f s", same, cases, close, cases,
                      worst, secs)};
}

// ---------------------------------------------------------------- A3

Outcome a3() {
    const auto t0 = Clock::now();
    double worst_circ = 0, worst_lin = 0;
    CaptureConfig circ, lin;
    circ.normalize_output = lin.normalize_output = false;
    lin.boundary_effect = true;
    for (unsigned k = 0; k < 10; ++k) {
        const Image scene = oracle::random_frame(64, 64, 300 + k);
        const Mask mask = generate_mask(MaskFamily::Pseudorandom, 64, 64, 0.5, 400 + k);
        worst_circ = std::max(worst_circ,
                              relative_l2(capture(scene, mask, circ), oracle::circular_convolution(scene, mask.pattern())));
        worst_lin = std::max(worst_lin, relative_l2(capture(scene, mask, lin),
                                                    oracle::linear_convolution_central(scene, mask.pattern())));
    }
    const double secs = seconds_since(t0);
    return {worst_circ <= 1e-6 && worst_lin <= 1e-6 && secs < 30,
            fmt("max rel-L2 circular %.2e, linear %.2e over 10 cases, %.1f s", worst_circ, worst_lin, secs)};
}

// ---------------------------------------------------------------- A4

Outcome a4() {
    const auto t0 = Clock::now();
    const int n = 128;
    const double deg = std::acos(-1.0) / 180.0;
    const LogPolarGeometry g = resolve_log_polar({}, n, n);
    double worst_theta = 0, worst_rho = 0;
    int ok = 0, total = 0;
    for (unsigned seed : {10u, 11u, 12u}) {
        const auto blobs = oracle::random_blobs(30, 24, seed, 0.8, 1.6);
        const Image f = oracle::render_blobs(blobs, n, n, 0.0, 1.0);
        for (double a : {10.0, 30.0, 60.0}) {
            const Image r = oracle::render_blobs(blobs, n, n, a * deg, 1.0);
            const MotionEstimate e = recover_motion(t_map(f, r), rs_map(f, r), g);
            const double bins = std::abs(e.dtheta - a * deg) / g.dtheta();
            worst_theta = std::max(worst_theta, bins);
            ok += bins <= 1.0 + 1e-9;
            ++total;
        }
        for (double s : {0.8, 1.25, 2.0}) {
            const Image r = oracle::render_blobs(blobs, n, n, 0.0, s);
            const MotionEstimate e = recover_motion(t_map(f, r), rs_map(f, r), g);
            const double bins = std::abs(std::log(e.scale) - std::log(s)) / g.dlog_rho();
            worst_rho = std::max(worst_rho, bins);
            ok += bins <= 1.0 + 1e-9;
            ++total;
        }
    }
    const double secs = seconds_since(t0);
    return {ok == total && secs < 30, fmt("%d/%d within one bin (worst theta %.2f bins, log-rho %.2f bins), %.1f s", ok,
                                          total, worst_theta, worst_rho, secs)};
}

// ---------------------------------------------------------------- A5

Outcome a5() {
    const auto t0 = Clock::now();
    double worst = 0;
    for (std::uint64_t state = 0; state < 3; ++state) {
        const int k = 7, d = 40;
        Model m(k, d);
        Rng rng = make_rng(77, {state});
        std::normal_distribution<double> g(0.0, 1.0);
        for (auto& w : m.weights) w = 0.3 * g(rng);
        for (auto& b : m.bias) b = 0.3 * g(rng);
        std::vector<std::vector<double>> x(16, std::vector<double>(static_cast<std::size_t>(d)));
        std::vector<int> y(16);
        for (auto& v : x)
            for (auto& e : v) e = g(rng);
        for (auto& l : y) l = std::uniform_int_distribution<int>(0, k - 1)(rng);
        const double l2 = 1e-2;
        const LossGrad lg = loss_and_gradient(m, x, y, l2);

        std::vector<double> theta = m.weights;
        theta.insert(theta.end(), m.bias.begin(), m.bias.end());
        auto loss_at = [&](const std::vector<double>& p) {
            Model t = m;
            std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(t.weights.size()), t.weights.begin());
            std::copy(p.begin() + static_cast<std::ptrdiff_t>(t.weights.size()), p.end(), t.bias.begin());
            return loss_and_gradient(t, x, y, l2).loss;
        };
        std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
        for (int c = 0; c < 10; ++c) {
            const std::size_t i = pick(rng);
            const double numeric = oracle::central_difference(loss_at, theta, i, 1e-5);
            const double analytic = i < m.weights.size() ? lg.grad_w[i] : lg.grad_b[i - m.weights.size()];
            worst = std::max(worst, std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8}));
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-4 && secs < 10, fmt("max relative error %.2e over 30 coordinates, %.2f s", worst, secs)};
}

// ---------------------------------------------------------------- A6 / A7

struct RegimeRun {
    double ms_dm = 0, t_dm = 0, ms_m1 = 0;
};

/// Training budget for the desk-scale benchmark. The default 50 epochs at lr 1e-4
/// do not fit the 15-minute budget on one core, so the schedule is shorter and
/// the step larger; every arm uses the same settings.
Hyper regime_hyper(std::uint64_t seed) {
    Hyper h;
    h.lr = 1e-3;
    h.epochs = 8;
    h.augment = false;
    h.seed = seed;
    h.threads = 0;
    return h;
}

const std::vector<RegimeRun>& regime_runs(double& secs) {
    static std::vector<RegimeRun> runs;
    static double elapsed = 0;
    if (runs.empty()) {
        const auto t0 = Clock::now();
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            BenchmarkSpec spec;
            spec.seed = seed;
            const Benchmark data = make_benchmark(spec);
            EvalProtocol unseen;
            unseen.mask_seed = 5000 + seed;  // neither a training nor a validation mask
            unseen.threads = 0;
            const Hyper h = regime_hyper(seed);
            const MaskRegime dm{Regime::DM1DM2, 100 * seed + 1, 100 * seed + 2};
            const MaskRegime m1{Regime::M1M1, 100 * seed + 1, 100 * seed + 1};

            Pipeline ms;
            Pipeline t = ms;
            t.input = InputKind::TOnly;
            RegimeRun r;
            r.ms_dm = evaluate(train(data, ms, dm, h).model, data, data.test, unseen).top1;
            r.t_dm = evaluate(train(data, t, dm, h).model, data, data.test, unseen).top1;
            r.ms_m1 = evaluate(train(data, ms, m1, h).model, data, data.test, unseen).top1;
            std::printf("   seed %llu: dm1dm2 MS-TRS %.3f, dm1dm2 T-only %.3f, m1m1 MS-TRS %.3f (%.0f s so far)\n",
                        static_cast<unsigned long long>(seed), r.ms_dm, r.t_dm, r.ms_m1, seconds_since(t0));
            std::fflush(stdout);
            runs.push_back(r);
        }
        elapsed = seconds_since(t0);
    }
    secs = elapsed;
    return runs;
}

Outcome a6() {
    double secs = 0;
    const auto& runs = regime_runs(secs);
    int feat = 0, regime = 0;
    for (const auto& r : runs) {
        feat += r.ms_dm >= r.t_dm;
        regime += r.ms_dm >= r.ms_m1;
    }
    return {feat >= 2 && regime >= 2 && secs <= 900,
            fmt("MS-TRS >= T-only in %d/3 seeds, dm1dm2 >= m1m1 (unseen mask) in %d/3 seeds, %.0f s", feat, regime,
                secs)};
}

Outcome a7() {
    double secs = 0;
    const auto& runs = regime_runs(secs);
    double mean = 0, lo = 1;
    for (const auto& r : runs) {
        mean += r.ms_dm / static_cast<double>(runs.size());
        lo = std::min(lo, r.ms_dm);
    }
    return {mean >= 0.6, fmt("dm1dm2 MS-TRS top-1 mean %.3f (min %.3f) over 3 seeds, chance %.3f", mean, lo, 1.0 / 7)};
}

// ---------------------------------------------------------------- A8

Outcome a8() {
    const auto t0 = Clock::now();
    // a benchmark-style frame: textured sprite over flat grey
    SynthSpec s;
    s.motion = MotionClass::Still;
    s.length = 2;
    s.sprite_size = 40;
    s.flat_background = true;
    s.seed = 21;
    const Frame scene = generate_clip(s).frames.front();

    SurveyOptions o;
    o.families = {MaskFamily::Pseudorandom};
    o.seeds = 20;
    const LeakageReport r = leakage_survey(scene, o);
    const double delta = leakage(scene, capture(scene, Mask::delta(scene.height(), scene.width()), {})).autocorr_similarity;
    const double secs = seconds_since(t0);
    const bool random_ok = r.autocorr_similarity >= 0.8;
    const bool delta_ok = std::abs(delta - 1.0) <= 1e-6;
    return {random_ok && delta_ok && secs < 30,
            fmt("pseudorandom mean similarity %.3f over 20 seeds (need >= 0.8; expected 1/sqrt(2) = 0.707 for "
                "Bernoulli masks), delta %.9f, %.1f s",
                r.autocorr_similarity, delta, secs)};
}

// ---------------------------------------------------------------- A9

ErrorCode read_code(const std::filesystem::path& p) {
    try {
        read_stack(p);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Parameter;  // not an error at all
}

Outcome a9() {
    const auto dir = std::filesystem::temp_directory_path() / "ltrs_acceptance_a9";
    std::filesystem::create_directories(dir);
    Clip clip;
    const Image base = oracle::random_frame(64, 64, 9);
    for (int i = 0; i < 7; ++i) clip.frames.push_back(circshift(base, i, -i));
    const FeatureStack st = extract_mstrs(clip, {{2, 3}, 7, 64, 48});
    const auto path = dir / "a.mstr";
    write_stack(path, st);
    const FeatureStack back = read_stack(path);
    const bool exact = back == st && std::memcmp(back.tensor.data(), st.tensor.data(), st.tensor.size() * 4) == 0;

    std::string bytes;
    {
        std::ifstream in(path, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    auto corrupt = [&](const char* name, auto edit) {
        std::string b = bytes;
        edit(b);
        const auto p = dir / name;
        std::ofstream(p, std::ios::binary).write(b.data(), static_cast<std::streamsize>(b.size()));
        return read_code(p);
    };
    const ErrorCode magic = corrupt("magic.mstr", [](std::string& b) { b[1] = 'Z'; });
    const ErrorCode length = corrupt("length.mstr", [](std::string& b) { b[12] = static_cast<char>(b[12] + 1); });
    std::filesystem::remove_all(dir);
    const bool ok = exact && magic == ErrorCode::Format && length == ErrorCode::Truncation;
    return {ok, fmt("round trip %s, bad magic -> %s, bad length -> %s", exact ? "bit-exact" : "DIFFERS",
                    std::string(to_string(magic)).c_str(), std::string(to_string(length)).c_str())};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> all = {
        {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
        {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}};
    std::set<std::string> wanted(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& [name, fn] : all) {
        if (!wanted.empty() && !wanted.count(name)) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s %s  %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
