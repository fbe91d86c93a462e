#include "ltrs/error.hpp"
#include "ltrs/features.hpp"
#include "ltrs/optics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <tuple>

using namespace ltrs;

namespace {

// count pairs (a, a + s) with both indices inside [0, l) and a a multiple of s
int enumerate_pairs(int s, int l) {
    int count = 0;
    for (int a = 0; a + s < l; a += s) ++count;
    return count;
}

Clip translating_clip(const Image& scene, int frames, int dx, int dy) {
    Clip clip;
    for (int i = 0; i < frames; ++i) clip.frames.push_back(circshift(scene, i * dx, i * dy));
    return clip;
}

Peak channel_peak(const FeatureStack& st, int c) {
    const auto ch = st.channel(c);
    const auto it = std::max_element(ch.begin(), ch.end());
    const auto idx = static_cast<int>(it - ch.begin());
    return {idx / st.width, idx % st.width, *it};
}

std::filesystem::path scratch(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / "ltrs_features_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("pair counts") {
    CHECK(n_pairs(2, 13) == 6);
    CHECK(n_pairs(6, 19) == 3);
    for (int s = 1; s < 10; ++s) CHECK(n_pairs(s, s + 1) == 1);
    for (int l = 2; l <= 30; ++l)
        for (int s = 1; s < l; ++s) REQUIRE(n_pairs(s, l) == enumerate_pairs(s, l));
    CHECK_THROWS_AS(n_pairs(0, 5), Error);
    CHECK_THROWS_AS(n_pairs(5, 5), Error);
}

TEST_CASE("channel counts of the published configurations") {
    const std::vector<std::tuple<std::vector<int>, int, int>> table = {
        {{2, 3, 4, 6}, 13, 30}, {{3, 4, 6}, 13, 18}, {{4, 6}, 13, 10}, {{3, 4, 6}, 19, 26}, {{4, 6}, 19, 14}};
    for (const auto& [strides, l, channels] : table) {
        CHECK(stack_channels({strides, l, 256, 224}) == channels);
        CHECK(stack_channels({strides, l, 256, 224}, FeatureSet::TOnly) == channels / 2);
    }
    CHECK(stack_channels({{2}, 13, 256, 224}) == 12);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(validate(StrideConfig{{}, 13, 64, 56}), Error);
    CHECK_THROWS_AS(validate(StrideConfig{{3, 2}, 13, 64, 56}), Error);
    CHECK_THROWS_AS(validate(StrideConfig{{2, 13}, 13, 64, 56}), Error);
    CHECK_THROWS_AS(validate(StrideConfig{{2}, 13, 48, 56}), Error);
    CHECK_NOTHROW(validate(StrideConfig{{2}, 13, 56, 56}));
}

TEST_CASE("tensor shape and channel order") {
    const Image scene = oracle::random_frame(64, 64, 1);
    const Clip clip = translating_clip(scene, 13, 1, 0);
    const StrideConfig cfg{{2, 3, 4, 6}, 13, 64, 56};
    const FeatureStack st = extract_mstrs(clip, cfg);
    CHECK(st.channels == 30);
    CHECK(st.height == 56);
    CHECK(st.width == 56);
    CHECK(st.tensor.size() == 30u * 56u * 56u);
    REQUIRE(st.info.size() == 30u);
    CHECK(st.info.front() == ChannelInfo{2, 0, MapKind::T});
    CHECK(st.info[5] == ChannelInfo{2, 5, MapKind::T});
    CHECK(st.info[6] == ChannelInfo{2, 0, MapKind::RS});
    CHECK(st.info[12] == ChannelInfo{3, 0, MapKind::T});
    CHECK(st.info.back() == ChannelInfo{6, 1, MapKind::RS});

    std::set<std::tuple<int, int, int>> unique;
    for (const auto& c : st.info) unique.insert({c.stride, c.pair_index, static_cast<int>(c.kind)});
    CHECK(unique.size() == st.info.size());

    const FeatureStack t = extract_mstrs(clip, cfg, 0, ExtractOptions{FeatureSet::TOnly});
    CHECK(t.channels == 15);
    for (const auto& c : t.info) CHECK(c.kind == MapKind::T);
}

TEST_CASE("full-resolution shape") {
    const Clip clip = translating_clip(oracle::random_frame(256, 256, 2), 13, 0, 0);
    const FeatureStack st = extract_mstrs(clip, {{2, 3, 4, 6}, 13, 256, 224});
    CHECK(st.channels == 30);
    CHECK(st.height == 224);
    CHECK(st.width == 224);
}

TEST_CASE("static clip peaks at the centre of every T channel") {
    const Clip clip = translating_clip(oracle::random_frame(64, 64, 3), 7, 0, 0);
    const FeatureStack st = extract_mstrs(clip, {{1, 2, 3}, 7, 64, 48});
    for (int c = 0; c < st.channels; ++c) {
        if (st.info[static_cast<std::size_t>(c)].kind != MapKind::T) continue;
        const Peak p = channel_peak(st, c);
        CHECK(p.row == 24);
        CHECK(p.col == 24);
    }
}

TEST_CASE("reversing the clip negates the T peak offsets") {
    const Clip fwd = translating_clip(oracle::blob_texture(64, 64, 4), 9, 2, -1);
    Clip rev = fwd;
    std::reverse(rev.frames.begin(), rev.frames.end());
    const StrideConfig cfg{{1, 2, 4}, 9, 64, 64};
    const FeatureStack a = extract_mstrs(fwd, cfg);
    const FeatureStack b = extract_mstrs(rev, cfg);
    for (int c = 0; c < a.channels; ++c) {
        const auto& info = a.info[static_cast<std::size_t>(c)];
        if (info.kind != MapKind::T) continue;
        const Peak pa = channel_peak(a, c), pb = channel_peak(b, c);
        CHECK(pa.row - 32 == -(pb.row - 32));
        CHECK(pa.col - 32 == -(pb.col - 32));
        // content moves by stride * (2, -1): peak at centre - displacement
        CHECK(pa.col - 32 == -2 * info.stride);
        CHECK(pa.row - 32 == info.stride);
    }
}

TEST_CASE("coded-aperture T channels match raw-video T peaks") {
    const int n = 128;
    const Clip raw = translating_clip(oracle::dead_leaves(n, n, 5), 7, 3, 1);
    const StrideConfig cfg{{1, 2, 3}, 7, n, 112};
    const ExtractOptions t_only{FeatureSet::TOnly};
    const FeatureStack ref = extract_mstrs(raw, cfg, 0, t_only);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Mask mask = generate_mask(MaskFamily::Pseudorandom, n, n, 0.5, seed);
        const FeatureStack ca = extract_mstrs(capture_clip(raw, mask, CaptureConfig{}), cfg, 0, t_only);
        for (int c = 0; c < ca.channels; ++c) {
            const Peak pr = channel_peak(ref, c), pc = channel_peak(ca, c);
            REQUIRE(pr.row == pc.row);
            REQUIRE(pr.col == pc.col);
            REQUIRE(pr.col - 56 == -3 * ref.info[static_cast<std::size_t>(c)].stride);
        }
    }
}

TEST_CASE("deterministic, gain invariant and independent of the thread count") {
    const Clip clip = translating_clip(oracle::blob_texture(64, 64, 6), 8, 1, 2);
    Clip bright = clip;
    for (auto& f : bright.frames) f = scaled(f, 7.5);
    const StrideConfig cfg{{2, 3}, 8, 64, 56};
    const FeatureStack a = extract_mstrs(clip, cfg);
    CHECK(a == extract_mstrs(clip, cfg));
    ExtractOptions par;
    par.threads = 3;
    CHECK(a == extract_mstrs(clip, cfg, 0, par));
    const FeatureStack g = extract_mstrs(bright, cfg);
    double worst = 0;
    for (std::size_t i = 0; i < a.tensor.size(); ++i) worst = std::max(worst, double(std::abs(a.tensor[i] - g.tensor[i])));
    CHECK(worst <= 1e-6);
}

TEST_CASE("extraction errors") {
    const Clip clip = translating_clip(oracle::random_frame(64, 64, 7), 6, 1, 0);
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Io;
    };
    CHECK(code_of([&] { extract_mstrs(clip, {{2}, 7, 64, 56}); }) == ErrorCode::Validation);
    CHECK(code_of([&] { extract_mstrs(clip, {{2}, 5, 64, 56}, 2); }) == ErrorCode::Validation);
    CHECK(code_of([&] { extract_mstrs(clip, {{2}, 5, 128, 112}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("tensor file round trip and corruption") {
    const Clip clip = translating_clip(oracle::random_frame(32, 32, 8), 5, 1, 1);
    const FeatureStack st = extract_mstrs(clip, {{1, 2}, 5, 32, 24});
    const auto path = scratch("stack.mstr");
    write_stack(path, st);
    CHECK(read_stack(path) == st);
    CHECK(std::filesystem::file_size(path) > 20u + 4u * st.tensor.size());

    std::string bytes;
    {
        std::ifstream in(path, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    auto rewrite = [&](const std::string& content) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
    };
    auto code_of_read = [&]() {
        try {
            read_stack(path);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Io;
    };

    std::string bad = bytes;
    bad[0] = 'X';
    rewrite(bad);
    CHECK(code_of_read() == ErrorCode::Format);

    bad = bytes;
    bad[8] = static_cast<char>(bad[8] + 1);  // one more channel than stored
    rewrite(bad);
    CHECK(code_of_read() == ErrorCode::Truncation);

    rewrite(bytes.substr(0, bytes.size() / 2));
    CHECK(code_of_read() != ErrorCode::Io);

    bad = bytes;
    bad[4] = 9;
    rewrite(bad);
    CHECK(code_of_read() == ErrorCode::Format);

    CHECK_THROWS_AS(read_stack(scratch("missing.mstr")), Error);
    std::filesystem::remove_all(path.parent_path());
}

}  // TEST_SUITE
