#pragma once

#include "ltrs/clip.hpp"
#include "ltrs/motion.hpp"

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace ltrs {

/// Temporal strides over a clip of clip_length frames. Maps are computed at
/// sim_size x sim_size and cropped to crop_size.
struct StrideConfig {
    std::vector<int> strides;
    int clip_length = 0;
    int sim_size = 256;
    int crop_size = 224;
};

/// Throws Parameter unless strides are strictly ascending, positive and
/// below clip_length, and sim_size >= crop_size >= 8.
void validate(const StrideConfig& cfg);

/// Number of frame pairs (i*s, i*s + s) that fit in l frames.
int n_pairs(int stride, int clip_length);

enum class FeatureSet { MsTrs, TOnly };

std::string_view to_string(FeatureSet set);
FeatureSet parse_feature_set(std::string_view name);

/// Channel count: T and RS per pair for MsTrs, T only otherwise.
int stack_channels(const StrideConfig& cfg, FeatureSet set = FeatureSet::MsTrs);

struct ChannelInfo {
    int stride = 0;
    int pair_index = 0;
    MapKind kind = MapKind::T;
    friend bool operator==(const ChannelInfo&, const ChannelInfo&) = default;
};

/// C x H x W float tensor, channel-major then row-major.
struct FeatureStack {
    std::vector<float> tensor;
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<ChannelInfo> info;
    int crop_size = 0;

    std::span<const float> channel(int c) const;
    std::span<float> channel(int c);
    friend bool operator==(const FeatureStack&, const FeatureStack&) = default;
};

struct ExtractOptions {
    FeatureSet set = FeatureSet::MsTrs;
    double epsilon = kDefaultEpsilon;
    LogPolarParams log_polar;
    int threads = 1;
};

/// MS-TRS stack over frames [start, start + clip_length). Channel order:
/// strides ascending; within a stride all T maps then all RS maps, each by
/// pair index. T maps are centre-cropped; RS maps keep the central crop_size
/// theta bins and have their rho axis resampled to crop_size.
FeatureStack extract_mstrs(const Clip& clip, const StrideConfig& cfg, int start = 0, const ExtractOptions& opts = {});

/// Tensor file: "MSTR", u32 version, u32 C, H, W (little-endian), C*H*W
/// float32 LE, JSON trailer with channel metadata, u32 trailer length.
void write_stack(const std::filesystem::path& path, const FeatureStack& stack);
FeatureStack read_stack(const std::filesystem::path& path);

}  // namespace ltrs
