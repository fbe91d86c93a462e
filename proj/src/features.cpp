#include "ltrs/features.hpp"

#include "ltrs/error.hpp"
#include "ltrs/parallel.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace ltrs {

void validate(const StrideConfig& cfg) {
    if (cfg.strides.empty()) throw Error(ErrorCode::Parameter, "stride list is empty");
    for (std::size_t i = 0; i < cfg.strides.size(); ++i) {
        const int s = cfg.strides[i];
        if (s < 1) throw Error(ErrorCode::Parameter, "strides must be positive");
        if (i > 0 && s <= cfg.strides[i - 1]) throw Error(ErrorCode::Parameter, "strides must be strictly ascending");
    }
    if (cfg.strides.back() >= cfg.clip_length) {
        throw Error(ErrorCode::Parameter, "largest stride must be below the clip length");
    }
    if (cfg.crop_size < 8) throw Error(ErrorCode::Parameter, "crop_size must be >= 8");
    if (cfg.sim_size < cfg.crop_size) throw Error(ErrorCode::Parameter, "sim_size must be >= crop_size");
}

int n_pairs(int stride, int clip_length) {
    if (stride < 1 || stride >= clip_length) {
        throw Error(ErrorCode::Parameter, "n_pairs requires 1 <= stride < clip_length");
    }
    // pair i uses frames i*s and (i+1)*s, the latter must be <= l - 1
    return (clip_length - 1) / stride;
}

std::string_view to_string(FeatureSet set) { return set == FeatureSet::MsTrs ? "ms_trs" : "t_only"; }

FeatureSet parse_feature_set(std::string_view name) {
    if (name == "ms_trs" || name == "ms-trs") return FeatureSet::MsTrs;
    if (name == "t_only" || name == "t-only") return FeatureSet::TOnly;
    throw Error(ErrorCode::Parameter, "unknown feature set '" + std::string(name) + "'");
}

int stack_channels(const StrideConfig& cfg, FeatureSet set) {
    validate(cfg);
    const int per_pair = set == FeatureSet::MsTrs ? 2 : 1;
    int total = 0;
    for (int s : cfg.strides) total += per_pair * n_pairs(s, cfg.clip_length);
    return total;
}

std::span<const float> FeatureStack::channel(int c) const {
    const auto plane = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    return {tensor.data() + static_cast<std::size_t>(c) * plane, plane};
}

std::span<float> FeatureStack::channel(int c) {
    const auto plane = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    return {tensor.data() + static_cast<std::size_t>(c) * plane, plane};
}

namespace {

Image crop_rs(const Image& rs, int crop) {
    // theta (columns) keeps its central bins, log-rho (rows) is resampled
    const Image narrowed = crop_center(rs, rs.height(), crop);
    return resize_rows(narrowed, crop);
}

void store(FeatureStack& stack, int c, const Image& map) {
    auto dst = stack.channel(c);
    auto src = map.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(src[i]);
}

}  // namespace

FeatureStack extract_mstrs(const Clip& clip, const StrideConfig& cfg, int start, const ExtractOptions& opts) {
    validate(cfg);
    if (start < 0 || start + cfg.clip_length > clip.length()) {
        throw Error(ErrorCode::Validation, "clip has " + std::to_string(clip.length()) + " frames, need " +
                                               std::to_string(start + cfg.clip_length));
    }
    for (int i = start; i < start + cfg.clip_length; ++i) {
        const Frame& f = clip.frames[static_cast<std::size_t>(i)];
        if (f.height() != cfg.sim_size || f.width() != cfg.sim_size) {
            throw Error(ErrorCode::DimensionMismatch, "frames must be " + std::to_string(cfg.sim_size) + " x " +
                                                          std::to_string(cfg.sim_size));
        }
    }
    const bool with_rs = opts.set == FeatureSet::MsTrs;
    const int l = cfg.clip_length;

    // per-frame spectra and log-polar images are shared by every pair
    std::vector<Spectrum> spectra(static_cast<std::size_t>(l));
    std::vector<LogPolarImage> polar(with_rs ? static_cast<std::size_t>(l) : 0);
    parallel_for(static_cast<std::size_t>(l), opts.threads, [&](std::size_t i) {
        spectra[i] = forward_fft(clip.frames[static_cast<std::size_t>(start) + i]);
        if (with_rs) polar[i] = log_polar_magnitude(spectra[i], opts.log_polar);
    });

    struct Job {
        int channel;
        int first;
        int second;
        MapKind kind;
    };
    FeatureStack stack;
    std::vector<Job> jobs;
    for (int s : cfg.strides) {
        const int np = n_pairs(s, l);
        for (MapKind kind : {MapKind::T, MapKind::RS}) {
            if (kind == MapKind::RS && !with_rs) continue;
            for (int i = 0; i < np; ++i) {
                jobs.push_back({static_cast<int>(stack.info.size()), i * s, i * s + s, kind});
                stack.info.push_back({s, i, kind});
            }
        }
    }
    stack.channels = static_cast<int>(stack.info.size());
    stack.height = stack.width = stack.crop_size = cfg.crop_size;
    stack.tensor.assign(static_cast<std::size_t>(stack.channels) * static_cast<std::size_t>(cfg.crop_size) *
                            static_cast<std::size_t>(cfg.crop_size),
                        0.0f);

    parallel_for(jobs.size(), opts.threads, [&](std::size_t j) {
        const Job& job = jobs[j];
        const auto a = static_cast<std::size_t>(job.first);
        const auto b = static_cast<std::size_t>(job.second);
        if (job.kind == MapKind::T) {
            const CorrelationMap m = cross_power(spectra[a], spectra[b], opts.epsilon);
            store(stack, job.channel, crop_center(m.values, cfg.crop_size, cfg.crop_size));
        } else {
            const CorrelationMap m = rs_map(polar[a], polar[b], opts.epsilon);
            store(stack, job.channel, crop_rs(m.values, cfg.crop_size));
        }
    });
    return stack;
}

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'S', 'T', 'R'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 * 4;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

}  // namespace

void write_stack(const std::filesystem::path& path, const FeatureStack& stack) {
    const std::size_t expected = static_cast<std::size_t>(stack.channels) * static_cast<std::size_t>(stack.height) *
                                 static_cast<std::size_t>(stack.width);
    if (stack.tensor.size() != expected || stack.info.size() != static_cast<std::size_t>(stack.channels)) {
        throw Error(ErrorCode::Validation, "feature stack shape is inconsistent");
    }
    std::string buf;
    buf.reserve(kHeaderBytes + 4 * expected + 256);
    buf.append(kMagic.data(), kMagic.size());
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<std::uint32_t>(stack.channels));
    put_u32(buf, static_cast<std::uint32_t>(stack.height));
    put_u32(buf, static_cast<std::uint32_t>(stack.width));
    for (float v : stack.tensor) put_u32(buf, std::bit_cast<std::uint32_t>(v));

    nlohmann::json channels = nlohmann::json::array();
    for (const auto& c : stack.info) {
        channels.push_back({{"stride", c.stride}, {"pair_index", c.pair_index}, {"kind", to_string(c.kind)}});
    }
    const std::string trailer = nlohmann::json{{"crop_size", stack.crop_size}, {"channels", channels}}.dump();
    buf += trailer;
    put_u32(buf, static_cast<std::uint32_t>(trailer.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

FeatureStack read_stack(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    const std::string buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

    if (buf.size() < kHeaderBytes || std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) {
        throw Error(ErrorCode::Format, path.string() + ": not an MSTR tensor file");
    }
    if (get_u32(buf.data() + 4) != kVersion) {
        throw Error(ErrorCode::Format, path.string() + ": unsupported MSTR version " +
                                           std::to_string(get_u32(buf.data() + 4)));
    }
    FeatureStack stack;
    const std::uint32_t c = get_u32(buf.data() + 8);
    const std::uint32_t h = get_u32(buf.data() + 12);
    const std::uint32_t w = get_u32(buf.data() + 16);
    const std::uint64_t count = std::uint64_t{c} * h * w;
    if (buf.size() < kHeaderBytes + 4) throw Error(ErrorCode::Truncation, path.string() + ": missing trailer");
    const std::uint32_t trailer_len = get_u32(buf.data() + buf.size() - 4);
    if (kHeaderBytes + 4 * count + trailer_len + 4 != buf.size()) {
        throw Error(ErrorCode::Truncation, path.string() + ": header declares " + std::to_string(count) +
                                               " values, file size disagrees");
    }
    stack.channels = static_cast<int>(c);
    stack.height = static_cast<int>(h);
    stack.width = static_cast<int>(w);
    stack.tensor.resize(count);
    const char* p = buf.data() + kHeaderBytes;
    for (std::size_t i = 0; i < count; ++i, p += 4) stack.tensor[i] = std::bit_cast<float>(get_u32(p));

    try {
        const auto meta = nlohmann::json::parse(std::string_view(p, trailer_len));
        stack.crop_size = meta.at("crop_size").get<int>();
        for (const auto& ch : meta.at("channels")) {
            const auto kind = ch.at("kind").get<std::string>();
            if (kind != "T" && kind != "RS") throw Error(ErrorCode::Format, "unknown channel kind " + kind);
            stack.info.push_back(
                {ch.at("stride").get<int>(), ch.at("pair_index").get<int>(), kind == "T" ? MapKind::T : MapKind::RS});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, path.string() + ": malformed trailer: " + e.what());
    }
    if (stack.info.size() != c) throw Error(ErrorCode::Format, path.string() + ": channel metadata count mismatch");
    return stack;
}

}  // namespace ltrs
